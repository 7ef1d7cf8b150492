#include "hwdock/knowledge_base.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <set>

#include <json.hpp>

#include "hwdock/error.hpp"

namespace hwdock {

using nlohmann::json;

const char* to_string(PatternKind kind)
{
    switch (kind) {
    case PatternKind::PathGlob: return "path-glob";
    case PatternKind::ContentText: return "content-text";
    case PatternKind::ContentBinaryHex: return "content-binary-hex";
    case PatternKind::DevPath: return "dev-path";
    }
    return "unknown";
}

std::optional<PatternKind> pattern_kind_from_string(std::string_view s)
{
    for (auto k : {PatternKind::PathGlob, PatternKind::ContentText, PatternKind::ContentBinaryHex, PatternKind::DevPath})
        if (s == to_string(k))
            return k;
    return std::nullopt;
}

void Pattern::compile()
{
    if (expression.empty())
        throw Error(ErrorKind::Validation, "expression is empty");
    switch (kind) {
    case PatternKind::PathGlob: glob = std::make_shared<Glob>(Glob::compile(expression)); break;
    case PatternKind::ContentText: needle = to_bytes(expression); break;
    case PatternKind::ContentBinaryHex:
        if (expression.size() % 2 != 0)
            throw Error(ErrorKind::Validation, "hex expression has odd length");
        if (!hex_decode(expression, needle))
            throw Error(ErrorKind::Validation, "hex expression does not decode");
        break;
    case PatternKind::DevPath:
        if (!expression.starts_with("/dev/"))
            throw Error(ErrorKind::Validation, "dev-path must be an absolute path under /dev/");
        devPath = normalize_path(expression);
        if (escapes_root(devPath) || !devPath.starts_with("dev/"))
            throw Error(ErrorKind::Validation, "dev-path escapes /dev");
        break;
    }
}

bool KnowledgeBase::in_standard_dev_set(std::string_view path) const
{
    for (const auto& s : standardDevSet)
        if (path == s || (path.size() > s.size() && path.starts_with(s) && path[s.size()] == '/'))
            return true;
    return false;
}

const FeatureRule* KnowledgeBase::rule_for_feature(std::string_view feature) const
{
    for (const auto& r : rules)
        if (r.feature == feature)
            return &r;
    return nullptr;
}

namespace {

std::string get_string(const json& obj, const char* key, const std::string& where, bool required = true)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        if (required)
            throw Error(ErrorKind::Validation, where + key + " missing");
        return {};
    }
    if (!it->is_string())
        throw Error(ErrorKind::Validation, where + key + " must be a string");
    return it->get<std::string>();
}

} // namespace

KnowledgeBase parse_kb(std::string_view text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string("knowledge base is not valid JSON at byte ") +
                                          std::to_string(e.byte) + ": " + e.what());
    }
    if (!root.is_object())
        throw Error(ErrorKind::Validation, "knowledge base must be a JSON object");

    KnowledgeBase kb;
    kb.version = get_string(root, "version", "");

    auto devs = root.find("standardDevSet");
    if (devs == root.end() || !devs->is_array() || devs->empty())
        throw Error(ErrorKind::Validation, "standardDevSet missing/empty");
    for (const auto& d : *devs) {
        if (!d.is_string())
            throw Error(ErrorKind::Validation, "standardDevSet entries must be strings");
        auto p = normalize_path(d.get<std::string>());
        if (!p.starts_with("dev/"))
            throw Error(ErrorKind::Validation, "standardDevSet entry \"" + d.get<std::string>() + "\" is not under /dev");
        kb.standardDevSet.push_back(p);
    }

    auto rules = root.find("rules");
    if (rules != root.end() && !rules->is_array())
        throw Error(ErrorKind::Validation, "rules must be an array");

    std::set<std::string> ruleIds, features, patternIds;
    if (rules != root.end()) {
        std::size_t ri = 0;
        for (const auto& r : *rules) {
            std::string where = "rules[" + std::to_string(ri++) + "]";
            if (!r.is_object())
                throw Error(ErrorKind::Validation, where + " must be an object");
            FeatureRule rule;
            rule.id      = get_string(r, "id", where + ".");
            where        = "rule '" + rule.id + "' ";
            rule.feature = get_string(r, "feature", where);
            rule.notes   = get_string(r, "notes", where, false);
            if (auto s = r.find("simulatable"); s != r.end()) {
                if (!s->is_boolean())
                    throw Error(ErrorKind::Validation, where + "simulatable must be a boolean");
                rule.simulatable = s->get<bool>();
            }
            if (auto m = r.find("minMatches"); m != r.end()) {
                if (!m->is_number_integer())
                    throw Error(ErrorKind::Validation, where + "minMatches must be an integer");
                rule.minMatches = m->get<int>();
            }
            if (!ruleIds.insert(rule.id).second)
                throw Error(ErrorKind::Validation, where + "id: duplicate rule id");
            if (!features.insert(rule.feature).second)
                throw Error(ErrorKind::Validation, where + "feature: duplicate feature id '" + rule.feature + "'");

            auto pats = r.find("patterns");
            if (pats == r.end() || !pats->is_array())
                throw Error(ErrorKind::Validation, where + "patterns missing");
            std::size_t pi = 0;
            for (const auto& p : *pats) {
                std::string pwhere = where + "patterns[" + std::to_string(pi++) + "].";
                if (!p.is_object())
                    throw Error(ErrorKind::Validation, pwhere + " must be an object");
                Pattern pat;
                pat.id        = get_string(p, "id", pwhere);
                auto kindText = get_string(p, "kind", pwhere);
                auto kind     = pattern_kind_from_string(kindText);
                if (!kind)
                    throw Error(ErrorKind::Validation, pwhere + "kind: unknown pattern kind '" + kindText + "'");
                pat.kind       = *kind;
                pat.expression = get_string(p, "expression", pwhere);
                if (!patternIds.insert(pat.id).second)
                    throw Error(ErrorKind::Validation, pwhere + "id: duplicate pattern id '" + pat.id + "'");
                try {
                    pat.compile();
                } catch (const Error& e) {
                    throw Error(ErrorKind::Validation, pwhere + "expression: " + e.what());
                }
                rule.patterns.push_back(std::move(pat));
            }
            if (rule.minMatches < 1)
                throw Error(ErrorKind::Validation, where + "minMatches must be >= 1");
            if (static_cast<std::size_t>(rule.minMatches) > rule.patterns.size())
                throw Error(ErrorKind::Validation, where + "minMatches " + std::to_string(rule.minMatches) +
                                                       " exceeds pattern count " +
                                                       std::to_string(rule.patterns.size()));
            kb.rules.push_back(std::move(rule));
        }
    }
    return kb;
}

KnowledgeBase default_kb()
{
    static const KnowledgeBase kb = parse_kb(default_kb_json());
    return kb;
}

KnowledgeBase load_kb(const std::string& path)
{
    if (path.empty() || path == "default")
        return default_kb();
    auto bytes = read_file(path);
    return parse_kb(as_string(bytes));
}

std::string serialize_kb(const KnowledgeBase& kb)
{
    json root;
    root["version"]        = kb.version;
    root["standardDevSet"] = json::array();
    for (const auto& d : kb.standardDevSet)
        root["standardDevSet"].push_back("/" + d);
    root["rules"] = json::array();
    for (const auto& r : kb.rules) {
        json jr{{"id", r.id}, {"feature", r.feature}, {"minMatches", r.minMatches}, {"notes", r.notes}};
        if (r.simulatable)
            jr["simulatable"] = true;
        jr["patterns"] = json::array();
        for (const auto& p : r.patterns)
            jr["patterns"].push_back({{"id", p.id}, {"kind", to_string(p.kind)}, {"expression", p.expression}});
        root["rules"].push_back(std::move(jr));
    }
    return root.dump(2);
}

std::size_t MemorySource::read(std::uint64_t offset, std::span<std::uint8_t> out) const
{
    if (offset >= mData.size())
        return 0;
    auto n = std::min<std::uint64_t>(out.size(), mData.size() - offset);
    std::memcpy(out.data(), mData.data() + offset, n);
    return static_cast<std::size_t>(n);
}

namespace {

std::optional<std::uint64_t> search(ByteView hay, ByteView needle)
{
    if (needle.empty() || hay.size() < needle.size())
        return std::nullopt;
    auto it = std::search(hay.begin(), hay.end(), std::boyer_moore_horspool_searcher(needle.begin(), needle.end()));
    if (it == hay.end())
        return std::nullopt;
    return static_cast<std::uint64_t>(it - hay.begin());
}

} // namespace

std::optional<std::uint64_t> find_in_source(const ByteSource& source, ByteView needle, const MatchOptions& options)
{
    const auto total = source.size();
    if (needle.empty() || total < needle.size())
        return std::nullopt;
    if (total <= options.sizeCap) {
        if (auto v = source.view())
            return search(*v, needle);
        Bytes buf(total);
        auto  n = source.read(0, buf);
        buf.resize(n);
        return search(buf, needle);
    }

    // windows overlap by enough bytes that no occurrence straddles unseen
    const std::size_t overlap = std::max(options.overlap, needle.size() - 1);
    const std::size_t window  = std::max(options.windowSize, overlap + 1);
    Bytes             buf(window);
    std::uint64_t     start = 0;
    while (start < total) {
        auto n = source.read(start, buf);
        if (n == 0)
            break;
        if (auto hit = search(ByteView(buf).first(n), needle))
            return start + *hit;
        if (start + n >= total)
            break;
        start += n - std::min<std::size_t>(overlap, n - 1);
    }
    return std::nullopt;
}

MatchResult match_pattern(const Pattern& p, const FileEntry& entry, const ByteSource* content,
                          const MatchOptions& options)
{
    MatchResult r;
    r.path = entry.path;
    switch (p.kind) {
    case PatternKind::PathGlob:
        r.matched = p.glob && !entry.isWhiteout && !entry.isOpaqueWhiteout && p.glob->match(entry.path);
        return r;
    case PatternKind::DevPath:
        r.matched = !entry.isWhiteout && entry.path == p.devPath;
        return r;
    case PatternKind::ContentText:
    case PatternKind::ContentBinaryHex: break;
    }

    bool hasContent = entry.kind == EntryKind::Regular || entry.kind == EntryKind::Hardlink;
    if (!hasContent || content == nullptr) {
        r.skipped = true;
        return r;
    }
    if (content->size() > options.sizeCap && !options.streamLargeEntries) {
        r.skipped = true;
        return r;
    }
    r.partialContent = content->size() < entry.byteSize;
    r.offset         = find_in_source(*content, p.needle, options);
    r.matched        = r.offset.has_value();
    return r;
}

} // namespace hwdock
