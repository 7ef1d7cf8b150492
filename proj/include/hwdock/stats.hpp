#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scanner.hpp"

namespace hwdock {

/// Exact fraction; percentages are only rounded when formatted.
struct Ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 0;

    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
    bool   operator==(const Ratio&) const = default;
};

/// Integer percent, rounded half up; 0 for an empty denominator.
std::uint64_t round_percent(Ratio r);
/// "93%"
std::string format_percent(Ratio r);
/// "62 (93%)"
std::string format_count(Ratio r);

struct CountRange {
    std::optional<std::size_t> min;
    std::optional<std::size_t> max;
    /// Images with at least one file, over attempted images.
    Ratio withAny;

    bool operator==(const CountRange&) const = default;
};

/// "27..36 (53%)", "27 (40%)" when min == max, "0 (0%)" when no image has any.
std::string format_range(const CountRange& r);

struct FeatureStats {
    std::size_t confirmed = 0;
    std::size_t suspected = 0;
    std::size_t absent    = 0;
    Ratio       confirmedShare;
    Ratio       suspectedShare;
    Ratio       absentShare;

    bool operator==(const FeatureStats&) const = default;
};

struct CorpusStats {
    std::size_t                         count          = 0;
    std::size_t                         retrievedCount = 0;
    Ratio                               retrieved;
    std::uint64_t                       cumulativeDiskSize = 0;
    std::map<std::string, FeatureStats> perFeature;
    /// Only when every retrieved report is labeled.
    std::optional<Ratio> detectionCorrectness;
    /// Mean devLayerCount over images with at least one /dev layer.
    Ratio       avgDevLayers;
    Ratio       multipleDevLayers;
    CountRange  shadowRange;
    CountRange  furtherRange;
    std::size_t tmpLeftoverImages = 0;
    double      totalDetectionTimeSeconds = 0;
};

/// attempted must be >= reports.size(); reports are the retrieved images.
CorpusStats aggregate_reports(const std::vector<ScanReport>& reports, std::size_t attempted);

/// An image counts as correct when its confirmed feature set equals its label.
bool detection_correct(const ScanReport& r);

std::string corpus_stats_to_json(const CorpusStats& s, int indent = 2);
std::string render_corpus_text(const CorpusStats& s);

} // namespace hwdock
