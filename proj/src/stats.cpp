#include "hwdock/stats.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hwdock/error.hpp"

namespace hwdock {

using nlohmann::json;

std::uint64_t round_percent(Ratio r)
{
    if (r.den == 0)
        return 0;
    // floor(100 * num / den + 1/2) in integers
    return (200 * r.num + r.den) / (2 * r.den);
}

std::string format_percent(Ratio r)
{
    return std::to_string(round_percent(r)) + "%";
}

std::string format_count(Ratio r)
{
    return std::to_string(r.num) + " (" + format_percent(r) + ")";
}

std::string format_range(const CountRange& r)
{
    if (!r.min || !r.max)
        return "0 (" + format_percent(r.withAny) + ")";
    std::string span = *r.min == *r.max ? std::to_string(*r.min) : std::to_string(*r.min) + ".." + std::to_string(*r.max);
    return span + " (" + format_percent(r.withAny) + ")";
}

bool detection_correct(const ScanReport& r)
{
    if (!r.label)
        return false;
    std::set<std::string> expected(r.label->begin(), r.label->end());
    std::set<std::string> confirmed;
    for (const auto& d : r.detections)
        if (d.verdict == Verdict::Confirmed)
            confirmed.insert(d.feature);
    return expected == confirmed;
}

namespace {

void update_range(CountRange& range, std::size_t value)
{
    if (value == 0)
        return;
    range.min = range.min ? std::min(*range.min, value) : value;
    range.max = range.max ? std::max(*range.max, value) : value;
    ++range.withAny.num;
}

std::string format_mean(Ratio r)
{
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << r.value();
    return out.str();
}

json ratio_json(Ratio r)
{
    return {{"num", r.num}, {"den", r.den}, {"percent", round_percent(r)}};
}

json range_json(const CountRange& r)
{
    json j{{"withAny", ratio_json(r.withAny)}, {"display", format_range(r)}};
    j["min"] = r.min ? json(*r.min) : json(nullptr);
    j["max"] = r.max ? json(*r.max) : json(nullptr);
    return j;
}

} // namespace

CorpusStats aggregate_reports(const std::vector<ScanReport>& reports, std::size_t attempted)
{
    if (attempted < reports.size())
        throw Error(ErrorKind::Validation, "attempted (" + std::to_string(attempted) +
                                               ") is smaller than the number of reports (" +
                                               std::to_string(reports.size()) + ")");
    CorpusStats s;
    s.count          = attempted;
    s.retrievedCount = reports.size();
    s.retrieved      = {reports.size(), attempted};
    const std::uint64_t n = reports.size();

    // device-file shares are taken over every attempted image
    s.multipleDevLayers.den    = attempted;
    s.shadowRange.withAny.den  = attempted;
    s.furtherRange.withAny.den = attempted;

    std::size_t labeled = 0, correct = 0;
    for (const auto& r : reports) {
        s.cumulativeDiskSize += r.unpackedByteSize;
        s.totalDetectionTimeSeconds += r.scanDurationSeconds;
        for (const auto& d : r.detections) {
            auto& f = s.perFeature[d.feature];
            switch (d.verdict) {
            case Verdict::Confirmed: ++f.confirmed; break;
            case Verdict::Suspected: ++f.suspected; break;
            case Verdict::Absent: ++f.absent; break;
            }
        }
        const auto& h = r.devHygiene;
        if (h.devLayerCount >= 1) {
            s.avgDevLayers.num += h.devLayerCount;
            ++s.avgDevLayers.den;
        }
        if (h.devLayerCount > 1)
            ++s.multipleDevLayers.num;
        update_range(s.shadowRange, h.shadowDevFiles);
        update_range(s.furtherRange, h.furtherDevFiles);
        if (h.tmpLeftoverCount > 0)
            ++s.tmpLeftoverImages;
        if (r.label) {
            ++labeled;
            if (detection_correct(r))
                ++correct;
        }
    }
    for (auto& [_, f] : s.perFeature) {
        f.confirmedShare = {f.confirmed, n};
        f.suspectedShare = {f.suspected, n};
        f.absentShare    = {f.absent, n};
    }
    if (labeled > 0)
        s.detectionCorrectness = Ratio{correct, labeled};
    return s;
}

std::string corpus_stats_to_json(const CorpusStats& s, int indent)
{
    json j;
    j["count"]              = s.count;
    j["retrievedCount"]     = s.retrievedCount;
    j["retrieved"]          = ratio_json(s.retrieved);
    j["cumulativeDiskSize"] = s.cumulativeDiskSize;
    j["perFeature"]         = json::object();
    for (const auto& [name, f] : s.perFeature)
        j["perFeature"][name] = {{"confirmed", f.confirmed},
                                 {"suspected", f.suspected},
                                 {"absent", f.absent},
                                 {"confirmedPct", round_percent(f.confirmedShare)},
                                 {"suspectedPct", round_percent(f.suspectedShare)},
                                 {"absentPct", round_percent(f.absentShare)}};
    j["detectionCorrectness"] = s.detectionCorrectness ? ratio_json(*s.detectionCorrectness) : json(nullptr);
    j["avgDevLayers"]         = {{"num", s.avgDevLayers.num}, {"den", s.avgDevLayers.den}, {"value", s.avgDevLayers.value()}};
    j["multipleDevLayers"]    = ratio_json(s.multipleDevLayers);
    j["shadowDevFiles"]       = range_json(s.shadowRange);
    j["furtherDevFiles"]      = range_json(s.furtherRange);
    j["tmpLeftoverImages"]    = s.tmpLeftoverImages;
    j["totalDetectionTime"]   = s.totalDetectionTimeSeconds;
    return j.dump(indent);
}

std::string render_corpus_text(const CorpusStats& s)
{
    std::ostringstream out;
    auto row = [&](const std::string& label, const std::string& value) {
        out << std::left << std::setw(36) << label << value << "\n";
    };
    row("Count", std::to_string(s.count));
    row("Successfully retrieved", format_count(s.retrieved));
    row("Cumulative disk size", std::to_string(s.cumulativeDiskSize) + " bytes");
    if (s.detectionCorrectness)
        row("Hardware dep detection correctness", format_count(*s.detectionCorrectness));
    for (const auto& [name, f] : s.perFeature)
        row("  " + name + " confirmed/suspected", format_count(f.confirmedShare) + " / " + format_count(f.suspectedShare));
    std::ostringstream t;
    t << std::fixed << std::setprecision(1) << s.totalDetectionTimeSeconds << " s";
    row("Detection time", t.str());
    out << "\n";
    row("Average /dev layers", format_mean(s.avgDevLayers));
    row("Multiple /dev layers", format_count(s.multipleDevLayers));
    row("Shadow /dev files", format_range(s.shadowRange));
    row("Further /dev files", format_range(s.furtherRange));
    return out.str();
}

} // namespace hwdock
