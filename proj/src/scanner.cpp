#include "hwdock/scanner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hwdock/error.hpp"

namespace hwdock {

using nlohmann::json;

const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::Absent: return "absent";
    case Verdict::Suspected: return "suspected";
    case Verdict::Confirmed: return "confirmed";
    }
    return "absent";
}

std::optional<Verdict> verdict_from_string(std::string_view s)
{
    for (auto v : {Verdict::Absent, Verdict::Suspected, Verdict::Confirmed})
        if (s == to_string(v))
            return v;
    return std::nullopt;
}

const Detection* ScanReport::detection(std::string_view feature) const
{
    for (const auto& d : detections)
        if (d.feature == feature)
            return &d;
    return nullptr;
}

bool ScanReport::same_result(const ScanReport& o) const
{
    return imageRef == o.imageRef && manifestDigest == o.manifestDigest && kbVersion == o.kbVersion &&
           detections == o.detections && devHygiene == o.devHygiene && layerCount == o.layerCount &&
           unpackedByteSize == o.unpackedByteSize && warnings == o.warnings && label == o.label;
}

DevHygieneReport scan_dev(const MergedTree& tree, const KnowledgeBase& kb)
{
    DevHygieneReport r;
    r.devLayerCount = static_cast<std::size_t>(
        std::count(tree.perLayerDevPresence.begin(), tree.perLayerDevPresence.end(), true));
    for (const auto& d : list_dev_entries(tree)) {
        if (kb.in_standard_dev_set(d.path))
            ++r.shadowDevFiles;
        else
            ++r.furtherDevFiles;
        r.devPaths.push_back("/" + d.path);
    }
    for (const auto& prefix : {std::string("tmp/"), std::string("var/tmp/")}) {
        for (auto it = tree.nodes.lower_bound(prefix); it != tree.nodes.end() && it->first.starts_with(prefix); ++it) {
            auto kind = it->second.entry.kind;
            if (kind == EntryKind::Regular || kind == EntryKind::Hardlink)
                r.tmpLeftovers.push_back("/" + it->first);
        }
    }
    std::sort(r.tmpLeftovers.begin(), r.tmpLeftovers.end());
    r.tmpLeftoverCount = r.tmpLeftovers.size();
    return r;
}

ScanReport scan_image(const MergedTree& tree, const KnowledgeBase& kb, const ScanOptions& options)
{
    auto       started = std::chrono::steady_clock::now();
    ScanReport report;
    report.kbVersion  = kb.version;
    report.layerCount = tree.layerCount;
    for (auto s : tree.perLayerUnpackedSize)
        report.unpackedByteSize += s;
    for (const auto& f : tree.securityFindings)
        report.warnings.push_back("security: " + f);
    for (const auto& n : tree.notes)
        report.warnings.push_back("note: " + n);

    struct PatternState {
        std::size_t           hits = 0;
        std::vector<Evidence> evidence;
    };
    std::vector<std::vector<PatternState>> state(kb.rules.size());
    for (std::size_t r = 0; r < kb.rules.size(); ++r)
        state[r].resize(kb.rules[r].patterns.size());

    bool anyContent = false;
    for (const auto& rule : kb.rules)
        for (const auto& p : rule.patterns)
            anyContent = anyContent || p.is_content();

    for (const auto& [path, node] : tree.nodes) {
        std::optional<ByteView>     bytes;
        std::optional<MemorySource> source;
        bool                        contentChecked = false;
        auto content = [&]() -> const ByteSource* {
            if (!contentChecked) {
                contentChecked = true;
                bytes          = tree.content(node);
                if (bytes)
                    source.emplace(*bytes);
                else if (node.entry.kind == EntryKind::Regular || node.entry.kind == EntryKind::Hardlink)
                    report.warnings.push_back("unreadable content: /" + path);
            }
            return source ? &*source : nullptr;
        };

        for (std::size_t r = 0; r < kb.rules.size(); ++r) {
            const auto& rule = kb.rules[r];
            for (std::size_t pi = 0; pi < rule.patterns.size(); ++pi) {
                const auto& p = rule.patterns[pi];
                MatchResult m;
                if (p.is_content()) {
                    if (!anyContent || (node.entry.kind != EntryKind::Regular && node.entry.kind != EntryKind::Hardlink))
                        continue;
                    m = match_pattern(p, node.entry, content(), options.match);
                    if (m.partialContent)
                        report.warnings.push_back("partial content: /" + path);
                } else {
                    m = match_pattern(p, node.entry, nullptr, options.match);
                }
                if (!m.matched)
                    continue;
                auto& st = state[r][pi];
                ++st.hits;
                if (st.evidence.size() < options.maxEvidencePerPattern)
                    st.evidence.push_back({p.id, path, node.winningLayerIndex, m.offset});
            }
        }
    }

    for (std::size_t r = 0; r < kb.rules.size(); ++r) {
        const auto& rule = kb.rules[r];
        Detection   d;
        d.feature    = rule.feature;
        d.minMatches = rule.minMatches;
        for (std::size_t pi = 0; pi < rule.patterns.size(); ++pi) {
            auto& st = state[r][pi];
            if (st.hits == 0)
                continue;
            d.matchedPatterns.push_back(rule.patterns[pi].id);
            d.evidence.insert(d.evidence.end(), st.evidence.begin(), st.evidence.end());
        }
        std::sort(d.matchedPatterns.begin(), d.matchedPatterns.end());
        std::sort(d.evidence.begin(), d.evidence.end(), [](const Evidence& a, const Evidence& b) {
            return std::tie(a.path, a.patternId) < std::tie(b.path, b.patternId);
        });
        auto matched = static_cast<int>(d.matchedPatterns.size());
        d.verdict    = matched == 0 ? Verdict::Absent
                       : matched >= rule.minMatches ? Verdict::Confirmed
                                                    : Verdict::Suspected;
        report.detections.push_back(std::move(d));
    }

    // one warning per path is enough
    std::vector<std::string> uniq;
    std::set<std::string>    seen;
    for (auto& w : report.warnings)
        if (seen.insert(w).second)
            uniq.push_back(std::move(w));
    report.warnings = std::move(uniq);

    report.devHygiene = scan_dev(tree, kb);
    report.scanDurationSeconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

std::vector<ScanReport> scan_many(const std::vector<const MergedTree*>& trees, const KnowledgeBase& kb,
                                  unsigned width, const ScanOptions& options)
{
    std::vector<ScanReport> out(trees.size());
    if (width == 0)
        width = std::max(1u, std::thread::hardware_concurrency());
    width = std::min<unsigned>(width, static_cast<unsigned>(std::max<std::size_t>(1, trees.size())));

    std::atomic<std::size_t>  next{0};
    std::vector<std::thread>  workers;
    std::exception_ptr        failure;
    std::mutex                failureMutex;
    for (unsigned w = 0; w < width; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < trees.size(); i = next++) {
                try {
                    out[i] = scan_image(*trees[i], kb, options);
                } catch (...) {
                    std::lock_guard lock(failureMutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

std::string scan_report_to_json(const ScanReport& r, int indent)
{
    json j;
    j["imageRef"]       = r.imageRef;
    j["manifestDigest"] = r.manifestDigest;
    j["kbVersion"]      = r.kbVersion;
    j["detections"]     = json::array();
    for (const auto& d : r.detections) {
        json jd{{"feature", d.feature},
                {"verdict", to_string(d.verdict)},
                {"matchedPatterns", d.matchedPatterns},
                {"minMatches", d.minMatches},
                {"evidence", json::array()}};
        for (const auto& e : d.evidence) {
            json je{{"patternId", e.patternId}, {"path", "/" + e.path}, {"layerIndex", e.layerIndex}};
            if (e.offset)
                je["offset"] = *e.offset;
            jd["evidence"].push_back(std::move(je));
        }
        j["detections"].push_back(std::move(jd));
    }
    const auto& h       = r.devHygiene;
    j["devHygiene"]     = {{"devLayerCount", h.devLayerCount},
                           {"shadowDevFiles", h.shadowDevFiles},
                           {"furtherDevFiles", h.furtherDevFiles},
                           {"devPaths", h.devPaths},
                           {"tmpLeftovers", {{"count", h.tmpLeftoverCount}, {"paths", h.tmpLeftovers}}}};
    j["scanDuration"]     = r.scanDurationSeconds;
    j["layerCount"]       = r.layerCount;
    j["unpackedByteSize"] = r.unpackedByteSize;
    j["warnings"]         = r.warnings;
    if (r.label)
        j["label"] = *r.label;
    return j.dump(indent);
}

ScanReport scan_report_from_json(std::string_view text)
{
    try {
        json       j = json::parse(text);
        ScanReport r;
        r.imageRef       = j.value("imageRef", std::string{});
        r.manifestDigest = j.value("manifestDigest", std::string{});
        r.kbVersion      = j.value("kbVersion", std::string{});
        for (const auto& jd : j.at("detections")) {
            Detection d;
            d.feature = jd.at("feature").get<std::string>();
            auto v    = verdict_from_string(jd.at("verdict").get<std::string>());
            if (!v)
                throw Error(ErrorKind::Schema, "unknown verdict for " + d.feature);
            d.verdict         = *v;
            d.matchedPatterns = jd.value("matchedPatterns", std::vector<std::string>{});
            d.minMatches      = jd.value("minMatches", 1);
            for (const auto& je : jd.value("evidence", json::array())) {
                Evidence e;
                e.patternId  = je.at("patternId").get<std::string>();
                e.path       = normalize_path(je.at("path").get<std::string>());
                e.layerIndex = je.value("layerIndex", std::size_t{0});
                if (je.contains("offset"))
                    e.offset = je.at("offset").get<std::uint64_t>();
                d.evidence.push_back(std::move(e));
            }
            r.detections.push_back(std::move(d));
        }
        if (auto h = j.find("devHygiene"); h != j.end()) {
            r.devHygiene.devLayerCount   = h->value("devLayerCount", std::size_t{0});
            r.devHygiene.shadowDevFiles  = h->value("shadowDevFiles", std::size_t{0});
            r.devHygiene.furtherDevFiles = h->value("furtherDevFiles", std::size_t{0});
            r.devHygiene.devPaths        = h->value("devPaths", std::vector<std::string>{});
            if (auto t = h->find("tmpLeftovers"); t != h->end()) {
                r.devHygiene.tmpLeftoverCount = t->value("count", std::size_t{0});
                r.devHygiene.tmpLeftovers     = t->value("paths", std::vector<std::string>{});
            }
        }
        r.scanDurationSeconds = j.value("scanDuration", 0.0);
        r.layerCount          = j.value("layerCount", std::size_t{0});
        r.unpackedByteSize    = j.value("unpackedByteSize", std::uint64_t{0});
        r.warnings            = j.value("warnings", std::vector<std::string>{});
        if (j.contains("label"))
            r.label = j.at("label").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("invalid scan report: ") + e.what());
    }
}

std::string render_scan_text(const ScanReport& r)
{
    std::ostringstream out;
    out << "Image:            " << (r.imageRef.empty() ? "(local)" : r.imageRef) << "\n";
    if (!r.manifestDigest.empty())
        out << "Manifest digest:  " << r.manifestDigest << "\n";
    out << "Knowledge base:   " << r.kbVersion << "\n";
    out << "Layers:           " << r.layerCount << "\n";
    out << "Unpacked size:    " << r.unpackedByteSize << " bytes\n";
    out << "Detection time:   " << std::fixed << std::setprecision(3) << r.scanDurationSeconds << " s\n\n";
    out << "Hardware dependencies\n";
    for (const auto& d : r.detections) {
        out << "  " << std::left << std::setw(14) << d.feature << std::setw(10) << to_string(d.verdict) << "("
            << d.matchedPatterns.size() << " of min " << d.minMatches << " patterns)\n";
        for (const auto& e : d.evidence)
            out << "      " << e.patternId << "  /" << e.path << "  [layer " << e.layerIndex << "]"
                << (e.offset ? "  @" + std::to_string(*e.offset) : "") << "\n";
    }
    const auto& h = r.devHygiene;
    out << "\nDevice files\n";
    out << "  /dev layers:       " << h.devLayerCount << "\n";
    out << "  Shadow /dev files: " << h.shadowDevFiles << "\n";
    out << "  Further /dev files:" << " " << h.furtherDevFiles << "\n";
    for (const auto& p : h.devPaths)
        out << "      " << p << "\n";
    out << "  Temp leftovers:    " << h.tmpLeftoverCount << "\n";
    for (const auto& p : h.tmpLeftovers)
        out << "      " << p << "\n";
    if (!r.warnings.empty()) {
        out << "\nWarnings\n";
        for (const auto& w : r.warnings)
            out << "  " << w << "\n";
    }
    return out.str();
}

} // namespace hwdock
