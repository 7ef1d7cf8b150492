#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bytes.hpp"
#include "glob.hpp"
#include "layer.hpp"

namespace hwdock {

enum class PatternKind { PathGlob, ContentText, ContentBinaryHex, DevPath };

const char*                to_string(PatternKind kind);
std::optional<PatternKind> pattern_kind_from_string(std::string_view s);

struct Pattern {
    std::string id;
    PatternKind kind = PatternKind::PathGlob;
    std::string expression;

    /// Compiles the expression; throws Error(Validation).
    void compile();

    bool is_content() const { return kind == PatternKind::ContentText || kind == PatternKind::ContentBinaryHex; }

    // compiled state, filled by compile()
    std::shared_ptr<const Glob> glob;
    Bytes                       needle;
    std::string                 devPath;

    bool operator==(const Pattern& o) const { return id == o.id && kind == o.kind && expression == o.expression; }
};

struct FeatureRule {
    std::string          id;
    std::string          feature;
    std::vector<Pattern> patterns;
    int                  minMatches = 1;
    std::string          notes;
    /// The feature can degrade to a software fallback (e.g. SGX simulation).
    bool simulatable = false;

    bool operator==(const FeatureRule&) const = default;
};

struct KnowledgeBase {
    std::string              version;
    std::vector<std::string> standardDevSet; // normalized, e.g. "dev/null"
    std::vector<FeatureRule> rules;

    /// Exact member or below one ("dev/pts/0" is in via "dev/pts").
    bool in_standard_dev_set(std::string_view normalizedPath) const;

    const FeatureRule* rule_for_feature(std::string_view feature) const;

    bool operator==(const KnowledgeBase&) const = default;
};

/// Bundled rules (SGX, Nvidia, USB).
KnowledgeBase default_kb();
std::string_view default_kb_json();

/// Parses and fully validates; throws Error(Parse) or Error(Validation)
/// naming the rule and field at fault.
KnowledgeBase parse_kb(std::string_view jsonText);

/// "default" (or empty) selects the bundled KB.
KnowledgeBase load_kb(const std::string& path);

std::string serialize_kb(const KnowledgeBase& kb);

/// Random-access content behind a file entry.
class ByteSource {
public:
    virtual ~ByteSource() = default;

    virtual std::uint64_t size() const = 0;
    /// Copies up to out.size() bytes from offset; returns bytes copied.
    virtual std::size_t read(std::uint64_t offset, std::span<std::uint8_t> out) const = 0;
    /// Zero-copy view when the whole content is resident.
    virtual std::optional<ByteView> view() const { return std::nullopt; }
};

class MemorySource : public ByteSource {
public:
    explicit MemorySource(ByteView data)
        : mData(data)
    {
    }

    std::uint64_t           size() const override { return mData.size(); }
    std::size_t             read(std::uint64_t offset, std::span<std::uint8_t> out) const override;
    std::optional<ByteView> view() const override { return mData; }

private:
    ByteView mData;
};

struct MatchOptions {
    /// Entries above this size are searched in windows (or skipped).
    std::uint64_t sizeCap = 256ull << 20;
    std::size_t   windowSize = 8u << 20;
    std::size_t   overlap    = 64;
    bool          streamLargeEntries = true;
};

struct MatchResult {
    bool                         matched = false;
    std::string                  path;
    std::optional<std::uint64_t> offset;
    /// Content shorter than the declared entry size.
    bool partialContent = false;
    /// Content pattern not evaluated (wrong kind, too large).
    bool skipped = false;
};

/// Content patterns need content (regular files / resolved hardlinks);
/// they report the first match offset.
MatchResult match_pattern(const Pattern& p, const FileEntry& entry, const ByteSource* content,
                          const MatchOptions& options = {});

/// First occurrence of needle, searching in overlapping windows when the
/// source exceeds options.sizeCap.
std::optional<std::uint64_t> find_in_source(const ByteSource& source, ByteView needle, const MatchOptions& options);

} // namespace hwdock
