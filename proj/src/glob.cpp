#include "hwdock/glob.hpp"

#include "hwdock/error.hpp"

namespace hwdock {

namespace {

std::vector<std::string_view> split_path(std::string_view path)
{
    std::vector<std::string_view> parts;
    std::size_t                   i = 0;
    while (i <= path.size()) {
        auto j = path.find('/', i);
        if (j == std::string_view::npos)
            j = path.size();
        if (j > i)
            parts.push_back(path.substr(i, j - i));
        i = j + 1;
    }
    return parts;
}

/// Matches a bracket class starting at pattern[pi] == '['. On success pi is
/// advanced past ']'.
bool match_class(std::string_view pattern, std::size_t& pi, char c)
{
    std::size_t i      = pi + 1;
    bool        negate = false;
    if (i < pattern.size() && (pattern[i] == '!' || pattern[i] == '^')) {
        negate = true;
        ++i;
    }
    bool matched = false;
    bool first   = true;
    while (i < pattern.size() && (pattern[i] != ']' || first)) {
        first   = false;
        char lo = pattern[i];
        if (lo == '\\' && i + 1 < pattern.size())
            lo = pattern[++i];
        char hi = lo;
        if (i + 2 < pattern.size() && pattern[i + 1] == '-' && pattern[i + 2] != ']') {
            hi = pattern[i + 2];
            if (hi == '\\' && i + 3 < pattern.size()) {
                hi = pattern[i + 3];
                ++i;
            }
            i += 2;
        }
        if (c >= lo && c <= hi)
            matched = true;
        ++i;
    }
    pi = i + 1;
    return matched != negate;
}

void validate_segment(std::string_view seg, std::string_view whole)
{
    for (std::size_t i = 0; i < seg.size(); ++i) {
        char c = seg[i];
        if (c == '\\') {
            if (i + 1 >= seg.size())
                throw Error(ErrorKind::Validation, "glob \"" + std::string(whole) + "\": dangling escape");
            ++i;
        } else if (c == '[') {
            std::size_t j = i + 1;
            if (j < seg.size() && (seg[j] == '!' || seg[j] == '^'))
                ++j;
            if (j < seg.size() && seg[j] == ']')
                ++j;
            while (j < seg.size() && seg[j] != ']') {
                if (seg[j] == '\\')
                    ++j;
                ++j;
            }
            if (j >= seg.size())
                throw Error(ErrorKind::Validation, "glob \"" + std::string(whole) + "\": unterminated '['");
            i = j;
        } else if (c == '*' && i + 1 < seg.size() && seg[i + 1] == '*') {
            throw Error(ErrorKind::Validation,
                        "glob \"" + std::string(whole) + "\": '**' must be a whole path segment");
        }
    }
}

} // namespace

bool wildcard_match(std::string_view pattern, std::string_view text)
{
    std::size_t pi = 0, ti = 0;
    std::size_t starP = std::string_view::npos, starT = 0;
    while (ti < text.size()) {
        if (pi < pattern.size()) {
            char pc = pattern[pi];
            if (pc == '*') {
                starP = ++pi;
                starT = ti;
                continue;
            }
            if (pc == '?') {
                ++pi;
                ++ti;
                continue;
            }
            if (pc == '[') {
                std::size_t next = pi;
                if (match_class(pattern, next, text[ti])) {
                    pi = next;
                    ++ti;
                    continue;
                }
            } else {
                std::size_t width = 1;
                if (pc == '\\' && pi + 1 < pattern.size()) {
                    pc    = pattern[pi + 1];
                    width = 2;
                }
                if (pc == text[ti]) {
                    pi += width;
                    ++ti;
                    continue;
                }
            }
        }
        if (starP == std::string_view::npos)
            return false;
        pi = starP;
        ti = ++starT;
    }
    while (pi < pattern.size() && pattern[pi] == '*')
        ++pi;
    return pi == pattern.size();
}

Glob Glob::compile(std::string_view pattern)
{
    if (pattern.empty())
        throw Error(ErrorKind::Validation, "empty glob");
    Glob g;
    g.mPattern = std::string(pattern);
    for (auto part : split_path(pattern)) {
        if (part == "**") {
            if (!g.mSegments.empty() && g.mSegments.back().doubleStar)
                continue;
            g.mSegments.push_back({true, {}});
            continue;
        }
        validate_segment(part, pattern);
        g.mSegments.push_back({false, std::string(part)});
    }
    if (g.mSegments.empty())
        throw Error(ErrorKind::Validation, "glob \"" + std::string(pattern) + "\" has no segments");
    return g;
}

bool Glob::match(std::string_view path) const
{
    return match_from(0, split_path(path), 0);
}

bool Glob::match_from(std::size_t si, const std::vector<std::string_view>& parts, std::size_t pi) const
{
    while (si < mSegments.size()) {
        const auto& seg = mSegments[si];
        if (seg.doubleStar) {
            if (si + 1 == mSegments.size())
                return true;
            for (std::size_t k = pi; k <= parts.size(); ++k)
                if (match_from(si + 1, parts, k))
                    return true;
            return false;
        }
        if (pi >= parts.size() || !wildcard_match(seg.text, parts[pi]))
            return false;
        ++si;
        ++pi;
    }
    return pi == parts.size();
}

} // namespace hwdock
