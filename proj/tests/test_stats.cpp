#include <gtest/gtest.h>

#include <random>

#include "hwdock/error.hpp"
#include "hwdock/stats.hpp"

using namespace hwdock;

namespace {

ScanReport report(std::size_t devLayers, std::size_t shadow, std::size_t further, bool correct = true)
{
    ScanReport r;
    r.devHygiene.devLayerCount   = devLayers;
    r.devHygiene.shadowDevFiles  = shadow;
    r.devHygiene.furtherDevFiles = further;
    Detection d;
    d.feature = "tee.sgx";
    d.verdict = Verdict::Confirmed;
    r.detections.push_back(d);
    r.label = correct ? std::vector<std::string>{"tee.sgx"} : std::vector<std::string>{};
    return r;
}

} // namespace

TEST(Percent, DisplayedCells)
{
    EXPECT_EQ(format_count({62, 67}), "62 (93%)");
    EXPECT_EQ(format_count({58, 62}), "58 (94%)");
    EXPECT_EQ(format_count({156, 164}), "156 (95%)");
    EXPECT_EQ(format_count({10, 67}), "10 (15%)");
    EXPECT_EQ(format_count({14, 36}), "14 (39%)");
    EXPECT_EQ(format_count({10, 14}), "10 (71%)");
    auto p = format_percent({152, 156});
    EXPECT_TRUE(p == "97%" || p == "98%") << p;
}

TEST(Percent, RoundHalfUpAgainstExactOracle)
{
    for (std::uint64_t den = 1; den <= 200; ++den)
        for (std::uint64_t num = 0; num <= den; ++num) {
            // oracle: compare 100*num/den with k +/- 1/2 using exact integers
            std::uint64_t k = 0;
            while (2 * 100 * num >= (2 * k + 1) * den)
                ++k;
            EXPECT_EQ(round_percent({num, den}), k) << num << "/" << den;
        }
    EXPECT_EQ(round_percent({0, 0}), 0u);
}

TEST(Range, Formatting)
{
    EXPECT_EQ(format_range({27, 36, {36, 67}}), "27..36 (54%)");
    EXPECT_EQ(format_range({27, 27, {27, 67}}), "27 (40%)");
    EXPECT_EQ(format_range({std::nullopt, std::nullopt, {0, 14}}), "0 (0%)");
}

TEST(Aggregate, RetrievedShare)
{
    std::vector<ScanReport> reports(62, report(1, 0, 0));
    auto                    s = aggregate_reports(reports, 67);
    EXPECT_EQ(s.count, 67u);
    EXPECT_EQ(s.retrievedCount, 62u);
    EXPECT_EQ(format_count(s.retrieved), "62 (93%)");
}

TEST(Aggregate, DetectionCorrectness)
{
    std::vector<ScanReport> reports;
    for (int i = 0; i < 62; ++i)
        reports.push_back(report(1, 0, 0, i < 58));
    auto s = aggregate_reports(reports, 67);
    ASSERT_TRUE(s.detectionCorrectness);
    EXPECT_EQ(format_count(*s.detectionCorrectness), "58 (94%)");
}

TEST(Aggregate, UnlabeledCorpusHasNoCorrectness)
{
    std::vector<ScanReport> reports(3, report(1, 0, 0));
    for (auto& r : reports)
        r.label.reset();
    EXPECT_FALSE(aggregate_reports(reports, 3).detectionCorrectness);
}

TEST(Aggregate, MultipleDevLayers)
{
    std::vector<ScanReport> reports;
    for (int i = 0; i < 62; ++i) // 62 of 67 attempted images retrieved
        reports.push_back(report(i < 10 ? 2 : 1, 0, 0));
    auto s = aggregate_reports(reports, 67);
    EXPECT_EQ(format_count(s.multipleDevLayers), "10 (15%)");
}

TEST(Aggregate, EmptyIsAllZero)
{
    auto s = aggregate_reports({}, 0);
    EXPECT_EQ(s.count, 0u);
    EXPECT_EQ(format_count(s.retrieved), "0 (0%)");
    EXPECT_EQ(s.avgDevLayers.value(), 0.0);
    EXPECT_EQ(format_range(s.shadowRange), "0 (0%)");
    EXPECT_TRUE(s.perFeature.empty());
}

TEST(Aggregate, AttemptedBelowReportsRejected)
{
    EXPECT_THROW(aggregate_reports(std::vector<ScanReport>(3), 2), Error);
}

TEST(Aggregate, SingletonIsDegenerate)
{
    auto r = report(3, 5, 2);
    r.unpackedByteSize    = 1234;
    r.scanDurationSeconds = 1.5;
    auto s                = aggregate_reports({r}, 1);
    EXPECT_EQ(s.cumulativeDiskSize, 1234u);
    EXPECT_DOUBLE_EQ(s.totalDetectionTimeSeconds, 1.5);
    EXPECT_DOUBLE_EQ(s.avgDevLayers.value(), 3.0);
    EXPECT_EQ(format_range(s.shadowRange), "5 (100%)");
    EXPECT_EQ(format_range(s.furtherRange), "2 (100%)");
    EXPECT_EQ(s.perFeature.at("tee.sgx").confirmed, 1u);
}

TEST(AggregateProperty, RangesAndMeansMatchDirectComputation)
{
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        std::vector<ScanReport> reports(1 + rng() % 30);
        std::size_t mn = SIZE_MAX, mx = 0, with = 0, layerSum = 0, layerImgs = 0;
        for (auto& r : reports) {
            r = report(rng() % 4, rng() % 3 == 0 ? 0 : rng() % 40, rng() % 5);
            auto sh = r.devHygiene.shadowDevFiles;
            if (sh > 0)
                mn = std::min(mn, sh), mx = std::max(mx, sh), ++with;
            if (r.devHygiene.devLayerCount > 0)
                layerSum += r.devHygiene.devLayerCount, ++layerImgs;
        }
        auto attempted = reports.size() + rng() % 5;
        auto s         = aggregate_reports(reports, attempted);
        EXPECT_EQ(s.shadowRange.withAny, (Ratio{with, attempted}));
        if (with > 0) {
            EXPECT_EQ(*s.shadowRange.min, mn);
            EXPECT_EQ(*s.shadowRange.max, mx);
            EXPECT_LE(*s.shadowRange.min, *s.shadowRange.max);
        }
        EXPECT_EQ(s.avgDevLayers, (Ratio{layerSum, layerImgs}));
    }
}
