#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "knowledge_base.hpp"
#include "merged_tree.hpp"

namespace hwdock {

enum class Verdict { Absent, Suspected, Confirmed };

const char*            to_string(Verdict v);
std::optional<Verdict> verdict_from_string(std::string_view s);

struct Evidence {
    std::string                  patternId;
    std::string                  path;
    std::size_t                  layerIndex = 0;
    std::optional<std::uint64_t> offset;

    bool operator==(const Evidence&) const = default;
};

struct Detection {
    std::string           feature;
    Verdict               verdict = Verdict::Absent;
    /// Distinct patterns that matched at least once.
    std::vector<std::string> matchedPatterns;
    int                      minMatches = 1;
    /// Sorted by (path, patternId); capped per pattern.
    std::vector<Evidence> evidence;

    bool operator==(const Detection&) const = default;
};

struct DevHygieneReport {
    std::size_t              devLayerCount  = 0;
    std::size_t              shadowDevFiles = 0;
    std::size_t              furtherDevFiles = 0;
    std::vector<std::string> devPaths;
    std::size_t              tmpLeftoverCount = 0;
    std::vector<std::string> tmpLeftovers;

    bool operator==(const DevHygieneReport&) const = default;
};

struct ScanReport {
    std::string            imageRef;
    std::string            manifestDigest;
    std::string            kbVersion;
    std::vector<Detection> detections;
    DevHygieneReport       devHygiene;
    double                 scanDurationSeconds = 0;
    std::size_t            layerCount          = 0;
    std::uint64_t          unpackedByteSize    = 0;
    std::vector<std::string> warnings;
    /// Ground truth: feature ids that should be confirmed. Only when labeled.
    std::optional<std::vector<std::string>> label;

    const Detection* detection(std::string_view feature) const;

    /// Equality ignoring scanDurationSeconds.
    bool same_result(const ScanReport& o) const;
};

struct ScanOptions {
    MatchOptions match;
    /// Evidence entries kept per pattern.
    std::size_t maxEvidencePerPattern = 16;
};

ScanReport       scan_image(const MergedTree& tree, const KnowledgeBase& kb, const ScanOptions& options = {});
DevHygieneReport scan_dev(const MergedTree& tree, const KnowledgeBase& kb);

/// Scans several trees on a worker pool; results keep input order.
std::vector<ScanReport> scan_many(const std::vector<const MergedTree*>& trees, const KnowledgeBase& kb,
                                  unsigned width = 0, const ScanOptions& options = {});

std::string scan_report_to_json(const ScanReport& r, int indent = 2);
ScanReport  scan_report_from_json(std::string_view text);

/// Human-readable text block for one report.
std::string render_scan_text(const ScanReport& r);

} // namespace hwdock
