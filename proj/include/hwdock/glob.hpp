#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hwdock {

/// Path glob over '/'-separated relative paths.
///
///  - `*` and `?` never cross a '/'; `[abc]`, `[a-z]`, `[!x]` classes; `\` escapes
///  - `**` as a whole segment matches zero or more segments
///  - a leading '/' is ignored, since tree paths are stored without it
///
/// Matching is case-sensitive.
class Glob {
public:
    /// Throws Error(Validation) for an empty pattern, an unterminated class,
    /// a dangling escape or `**` mixed into a segment.
    static Glob compile(std::string_view pattern);

    bool match(std::string_view path) const;

    const std::string& pattern() const { return mPattern; }

private:
    struct Segment {
        bool        doubleStar = false;
        std::string text;
    };

    bool match_from(std::size_t segIdx, const std::vector<std::string_view>& parts, std::size_t partIdx) const;

    std::string          mPattern;
    std::vector<Segment> mSegments;
};

/// Single-segment wildcard match (no '/' handling).
bool wildcard_match(std::string_view pattern, std::string_view text);

} // namespace hwdock
