#include "hwdock/collector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hwdock/bytes.hpp"
#include "hwdock/error.hpp"

namespace hwdock {

namespace fs = std::filesystem;
using nlohmann::json;

HubClient::HubClient(HubConfig config, std::shared_ptr<HttpTransport> transport, std::shared_ptr<Clock> clock,
                     std::shared_ptr<RateLimiter> limiter)
    : mConfig(std::move(config))
    , mTransport(std::move(transport))
    , mClock(std::move(clock))
    , mLimiter(limiter ? std::move(limiter) : std::make_shared<RateLimiter>(RateBudget{}, mClock))
{
    while (mConfig.baseUrl.ends_with('/'))
        mConfig.baseUrl.pop_back();
}

std::string HubClient::absolute(const std::string& url) const
{
    if (url.starts_with("http://") || url.starts_with("https://"))
        return url;
    return mConfig.baseUrl + (url.starts_with('/') ? "" : "/") + url;
}

std::optional<std::vector<std::string>> HubClient::get_pages(const std::string& firstUrl)
{
    HttpHeaders headers{{"Accept", "application/json"}};
    if (mConfig.authToken)
        headers.emplace_back("Authorization", "Bearer " + *mConfig.authToken);

    std::vector<std::string> pages;
    std::set<std::string>    visited;
    std::string              url = firstUrl;
    while (!url.empty() && visited.insert(url).second) {
        auto resp = budgeted_get(*mTransport, *mLimiter, *mClock, mConfig.retry, url, headers);
        if (resp.status == 404)
            return pages.empty() ? std::nullopt : std::optional(pages);
        if (resp.status == 401 || resp.status == 403)
            throw Error(ErrorKind::AuthRequired, "hub refused " + url + " (HTTP " + std::to_string(resp.status) + ")");
        if (resp.status != 200)
            throw Error(ErrorKind::Network, "GET " + url + " returned HTTP " + std::to_string(resp.status));
        std::string next;
        try {
            auto j = json::parse(resp.body);
            if (j.is_object() && j.contains("next") && j["next"].is_string())
                next = j["next"].get<std::string>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Parse, "malformed hub response from " + url + ": " + e.what());
        }
        pages.push_back(std::move(resp.body));
        url = next.empty() ? std::string{} : absolute(next);
    }
    return pages;
}

std::optional<std::vector<std::string>> HubClient::list_namespace(const std::string& ns)
{
    auto pages = get_pages(mConfig.baseUrl + "/v2/repositories/" + ns + "/?page_size=" + std::to_string(mConfig.pageSize));
    if (!pages)
        return std::nullopt;
    std::vector<std::string> out;
    for (const auto& page : *pages) {
        auto j = json::parse(page);
        if (!j.contains("results") || !j["results"].is_array())
            continue;
        for (const auto& r : j["results"])
            if (r.contains("name") && r["name"].is_string())
                out.push_back(ns + "/" + r["name"].get<std::string>());
    }
    return out;
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    if (!j.is_object() || !j.contains(key) || j[key].is_null())
        return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        return fallback;
    }
}

void sort_unique(std::vector<std::string>& v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

} // namespace

std::optional<RepoRecord> HubClient::fetch_repo(const std::string& fullName)
{
    auto info = get_pages(mConfig.baseUrl + "/v2/repositories/" + fullName + "/");
    if (!info || info->empty())
        return std::nullopt;

    RepoRecord rec;
    rec.name = fullName;
    rec.ns   = fullName.substr(0, fullName.find('/'));
    try {
        auto j          = json::parse(info->front());
        rec.lastUpdated = get_or<std::string>(j, "last_updated", "");
        rec.starCount   = get_or<std::uint64_t>(j, "star_count", 0);
        rec.pullCount   = get_or<std::uint64_t>(j, "pull_count", 0);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "malformed repository record for " + fullName + ": " + e.what());
    }

    auto pages = get_pages(mConfig.baseUrl + "/v2/repositories/" + fullName +
                           "/tags/?page_size=" + std::to_string(mConfig.pageSize));
    if (pages) {
        for (const auto& page : *pages) {
            auto j = json::parse(page);
            if (!j.contains("results") || !j["results"].is_array())
                continue;
            for (const auto& t : j["results"]) {
                TagSummary s;
                s.tag        = get_or<std::string>(t, "name", "");
                s.byteSize   = get_or<std::uint64_t>(t, "full_size", 0);
                s.lastPushed = get_or<std::string>(t, "tag_last_pushed", get_or<std::string>(t, "last_updated", ""));
                s.pusherName = get_or<std::string>(t, "last_updater_username", "");
                if (t.contains("images") && t["images"].is_array()) {
                    for (const auto& img : t["images"]) {
                        auto arch = get_or<std::string>(img, "architecture", "");
                        auto os   = get_or<std::string>(img, "os", "");
                        if (!arch.empty() && arch != "unknown")
                            s.architectures.push_back(arch);
                        if (!os.empty() && os != "unknown")
                            s.osList.push_back(os);
                    }
                }
                sort_unique(s.architectures);
                sort_unique(s.osList);
                rec.tagSummaries.push_back(std::move(s));
            }
        }
    }
    std::sort(rec.tagSummaries.begin(), rec.tagSummaries.end(),
              [](const TagSummary& a, const TagSummary& b) { return a.tag < b.tag; });
    return rec;
}

std::string normalize_repo_name(const std::string& name)
{
    std::string n = name;
    while (!n.empty() && n.front() == '/')
        n.erase(0, 1);
    while (!n.empty() && n.back() == '/')
        n.pop_back();
    if (n.empty())
        throw Error(ErrorKind::Validation, "empty repository name");
    return n.find('/') == std::string::npos ? "library/" + n : n;
}

Expansion expand_sample(const std::vector<std::string>& seed, HubClient& hub)
{
    if (seed.empty())
        throw Error(ErrorKind::Validation, "seed list is empty");
    Expansion             out;
    std::set<std::string> seen;
    auto                  add = [&](const std::string& n) {
        if (seen.insert(n).second)
            out.repos.push_back(n);
    };
    for (const auto& raw : seed) {
        auto name = normalize_repo_name(raw);
        add(name);
        if (!name.starts_with("library/"))
            continue;
        auto org = name.substr(8);
        try {
            if (auto repos = hub.list_namespace(org))
                for (const auto& r : *repos)
                    add(r);
        } catch (const Error& e) {
            out.failures.push_back({org, e.what()});
        }
    }
    return out;
}

std::vector<std::string> read_seed_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::Io, "cannot read seed file " + path);
    std::vector<std::string> out;
    std::string              line;
    while (std::getline(in, line)) {
        line = line.substr(0, line.find('#'));
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            continue;
        auto e = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(b, e - b + 1));
    }
    return out;
}

Snapshot take_snapshot(const std::vector<std::string>& repos, HubClient& hub, const std::string& sourceNote)
{
    Snapshot snap;
    snap.takenAt    = format_timestamp(hub.clock().now());
    snap.sourceNote = sourceNote;

    std::vector<std::optional<RepoRecord>> records(repos.size());
    std::vector<std::optional<std::string>> reasons(repos.size());
    std::atomic<std::size_t>                next{0};
    std::atomic<bool>                       budgetHit{false};
    unsigned width = std::max(1u, std::min<unsigned>(hub.config().width, static_cast<unsigned>(repos.size())));

    auto work = [&] {
        for (std::size_t i = next++; i < repos.size(); i = next++) {
            if (budgetHit) {
                reasons[i] = "not fetched: rate budget exhausted";
                continue;
            }
            try {
                auto rec = hub.fetch_repo(normalize_repo_name(repos[i]));
                if (rec)
                    records[i] = std::move(rec);
                else
                    reasons[i] = "repository absent (HTTP 404)";
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::BudgetExhausted)
                    budgetHit = true;
                reasons[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < width; ++w)
        pool.emplace_back(work);
    work();
    for (auto& t : pool)
        t.join();

    std::set<std::string> names;
    for (std::size_t i = 0; i < repos.size(); ++i) {
        if (records[i]) {
            if (names.insert(records[i]->name).second)
                snap.records.push_back(std::move(*records[i]));
        } else if (reasons[i]) {
            snap.absences.push_back({repos[i], *reasons[i]});
        }
    }
    snap.partial = budgetHit;
    std::sort(snap.records.begin(), snap.records.end(),
              [](const RepoRecord& a, const RepoRecord& b) { return a.name < b.name; });
    std::sort(snap.absences.begin(), snap.absences.end(),
              [](const Absence& a, const Absence& b) { return a.name < b.name; });
    return snap;
}

std::string snapshot_to_json(const Snapshot& s, int indent)
{
    json records = json::array();
    for (const auto& r : s.records) {
        json tags = json::array();
        for (const auto& t : r.tagSummaries)
            tags.push_back({{"tag", t.tag},
                            {"architectures", t.architectures},
                            {"osList", t.osList},
                            {"byteSize", t.byteSize},
                            {"lastPushed", t.lastPushed},
                            {"pusherName", t.pusherName}});
        records.push_back({{"name", r.name},
                           {"namespace", r.ns},
                           {"lastUpdated", r.lastUpdated},
                           {"starCount", r.starCount},
                           {"pullCount", r.pullCount},
                           {"tagSummaries", tags}});
    }
    json absences = json::array();
    for (const auto& a : s.absences)
        absences.push_back({{"name", a.name}, {"reason", a.reason}});
    json j{{"takenAt", s.takenAt},
           {"sourceNote", s.sourceNote},
           {"partial", s.partial},
           {"records", records},
           {"absences", absences}};
    return j.dump(indent);
}

Snapshot snapshot_from_json(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, "malformed snapshot at byte " + std::to_string(e.byte));
    }
    try {
        Snapshot s;
        s.takenAt    = j.at("takenAt").get<std::string>();
        s.sourceNote = j.value("sourceNote", "");
        s.partial    = j.value("partial", false);
        for (const auto& r : j.at("records")) {
            RepoRecord rec;
            rec.name        = r.at("name").get<std::string>();
            rec.ns          = r.value("namespace", "");
            rec.lastUpdated = r.value("lastUpdated", "");
            rec.starCount   = r.value("starCount", std::uint64_t{0});
            rec.pullCount   = r.value("pullCount", std::uint64_t{0});
            for (const auto& t : r.value("tagSummaries", json::array())) {
                TagSummary ts;
                ts.tag           = t.at("tag").get<std::string>();
                ts.architectures = t.value("architectures", std::vector<std::string>{});
                ts.osList        = t.value("osList", std::vector<std::string>{});
                ts.byteSize      = t.value("byteSize", std::uint64_t{0});
                ts.lastPushed    = t.value("lastPushed", "");
                ts.pusherName    = t.value("pusherName", "");
                rec.tagSummaries.push_back(std::move(ts));
            }
            s.records.push_back(std::move(rec));
        }
        for (const auto& a : j.value("absences", json::array()))
            s.absences.push_back({a.at("name").get<std::string>(), a.value("reason", "")});
        if (!parse_timestamp(s.takenAt))
            throw Error(ErrorKind::Schema, "snapshot takenAt malformed: " + s.takenAt);
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("snapshot: ") + e.what());
    }
}

std::string format_timestamp(TimePoint t)
{
    auto secs = std::chrono::floor<std::chrono::seconds>(t);
    auto day  = std::chrono::floor<std::chrono::days>(secs);
    std::chrono::year_month_day ymd{day};
    std::chrono::hh_mm_ss       hms{secs - day};
    char                        buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

std::optional<TimePoint> parse_timestamp(std::string_view text)
{
    int  y, mo, d, h, mi, s, n = 0;
    std::string str(text);
    if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s, &n) != 6 || n != 19)
        return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(mo), std::chrono::day(d)};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60)
        return std::nullopt;
    std::string_view rest = text.substr(19);
    Duration         frac{0};
    if (!rest.empty() && rest.front() == '.') {
        std::size_t i = 1;
        long long   scale = 100'000'000;
        long long   ns    = 0;
        while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) {
            ns += (rest[i] - '0') * scale;
            scale /= 10;
            ++i;
        }
        frac = std::chrono::nanoseconds(ns);
        rest = rest.substr(i);
    }
    if (!(rest.empty() || rest == "Z" || rest == "+00:00"))
        return std::nullopt;
    TimePoint tp = std::chrono::sys_days(ymd);
    tp += std::chrono::hours(h) + std::chrono::minutes(mi) + std::chrono::seconds(s) + frac;
    return tp;
}

namespace {

std::string compact_stamp(TimePoint t)
{
    auto s = format_timestamp(t); // YYYY-MM-DDTHH:MM:SSZ
    std::string out;
    for (char c : s)
        if (c != '-' && c != ':')
            out += c;
    return out;
}

std::optional<TimePoint> stamp_from_filename(const std::string& name)
{
    // snapshot-YYYYMMDDTHHMMSSZ.json
    if (!name.starts_with("snapshot-") || !name.ends_with(".json") || name.size() != 9 + 16 + 5)
        return std::nullopt;
    auto c = name.substr(9, 16);
    std::string iso = c.substr(0, 4) + "-" + c.substr(4, 2) + "-" + c.substr(6, 2) + "T" + c.substr(9, 2) + ":" +
                      c.substr(11, 2) + ":" + c.substr(13, 2) + "Z";
    return parse_timestamp(iso);
}

std::vector<fs::path> snapshot_files(const std::string& dir)
{
    std::vector<fs::path> out;
    std::error_code       ec;
    if (!fs::is_directory(dir, ec))
        return out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && stamp_from_filename(e.path().filename().string()))
            out.push_back(e.path());
    return out;
}

} // namespace

std::string save_snapshot(const std::string& dir, const Snapshot& s)
{
    auto taken = parse_timestamp(s.takenAt);
    if (!taken)
        throw Error(ErrorKind::Validation, "snapshot takenAt malformed: " + s.takenAt);
    for (const auto& p : snapshot_files(dir)) {
        auto stamp = stamp_from_filename(p.filename().string());
        if (std::chrono::floor<std::chrono::seconds>(*stamp) >= std::chrono::floor<std::chrono::seconds>(*taken))
            throw Error(ErrorKind::Validation, "snapshot " + s.takenAt + " is not newer than stored " + p.string() +
                                                   " (the store is append-only)");
    }
    auto day = fs::path(dir) / s.takenAt.substr(0, 10);
    fs::create_directories(day);
    auto path = day / ("snapshot-" + compact_stamp(*taken) + ".json");
    auto tmp  = path;
    tmp += ".tmp";
    auto text = snapshot_to_json(s) + "\n";
    write_file(tmp.string(), as_bytes(text));
    fs::rename(tmp, path);
    return path.string();
}

std::vector<Snapshot> load_snapshots(const std::string& dir)
{
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw Error(ErrorKind::Io, "snapshot directory not found: " + dir);
    std::vector<std::pair<TimePoint, Snapshot>> loaded;
    for (const auto& p : snapshot_files(dir)) {
        auto data = read_file(p.string());
        auto snap = snapshot_from_json(as_string(data));
        loaded.emplace_back(*parse_timestamp(snap.takenAt), std::move(snap));
    }
    std::sort(loaded.begin(), loaded.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Snapshot> out;
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        if (i > 0 && loaded[i].first <= loaded[i - 1].first)
            throw Error(ErrorKind::Validation, "two snapshots share takenAt " + loaded[i].second.takenAt);
        out.push_back(std::move(loaded[i].second));
    }
    return out;
}

namespace {

std::map<std::string, std::uint64_t> arch_counts(const Snapshot& s)
{
    std::map<std::string, std::uint64_t> counts;
    for (const auto& r : s.records)
        for (const auto& t : r.tagSummaries)
            for (const auto& a : t.architectures)
                ++counts[a];
    return counts;
}

int month_index(TimePoint t)
{
    std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(t)};
    return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

} // namespace

TrendStats compute_trends(const std::vector<Snapshot>& snapshots)
{
    if (snapshots.empty())
        throw Error(ErrorKind::Validation, "trends need at least one snapshot");
    TrendStats out;

    std::vector<TimePoint> times;
    for (const auto& s : snapshots) {
        auto t = parse_timestamp(s.takenAt);
        if (!t)
            throw Error(ErrorKind::Validation, "snapshot takenAt malformed: " + s.takenAt);
        if (!times.empty() && *t <= times.back())
            throw Error(ErrorKind::Validation, "snapshots not strictly ordered by takenAt at " + s.takenAt);
        times.push_back(*t);
    }

    auto          latest = arch_counts(snapshots.back());
    std::uint64_t total  = 0;
    for (const auto& [a, c] : latest)
        total += c;
    for (const auto& [a, c] : latest)
        out.archDistribution[a] = {c, total ? static_cast<double>(c) / static_cast<double>(total) : 0.0};
    if (snapshots.back().partial)
        out.notes.push_back("latest snapshot is partial");

    // Month buckets: the last snapshot within each calendar month represents it.
    std::map<int, std::size_t> monthRep;
    for (std::size_t i = 0; i < snapshots.size(); ++i)
        monthRep[month_index(times[i])] = i;
    if (monthRep.size() < 2) {
        out.notes.push_back("snapshots span a single calendar month: monthly growth not computed");
    } else {
        auto first  = arch_counts(snapshots[monthRep.begin()->second]);
        auto last   = arch_counts(snapshots[monthRep.rbegin()->second]);
        int  months = monthRep.rbegin()->first - monthRep.begin()->first;
        std::set<std::string> archs;
        for (const auto& [a, c] : first)
            archs.insert(a);
        for (const auto& [a, c] : last)
            archs.insert(a);
        for (const auto& a : archs) {
            double f = first.contains(a) ? static_cast<double>(first[a]) : 0.0;
            double l = last.contains(a) ? static_cast<double>(last[a]) : 0.0;
            if (f == 0) {
                out.notes.push_back(a + " absent in the first month: growth undefined");
                continue;
            }
            out.perArchMonthlyGrowth[a] = (std::pow(l / f, 1.0 / months) - 1.0) * 100.0;
        }
    }

    if (snapshots.size() < 2) {
        out.notes.push_back("single snapshot: activity series empty");
        return out;
    }
    for (std::size_t i = 1; i < snapshots.size(); ++i) {
        std::map<std::pair<std::string, std::string>, std::string> prev;
        for (const auto& r : snapshots[i - 1].records)
            for (const auto& t : r.tagSummaries)
                prev[{r.name, t.tag}] = t.lastPushed;

        ActivityPoint         p;
        std::set<std::string> users;
        p.date = snapshots[i].takenAt.substr(0, 10);
        for (const auto& r : snapshots[i].records) {
            for (const auto& t : r.tagSummaries) {
                bool updated = false;
                if (auto it = prev.find({r.name, t.tag}); it != prev.end()) {
                    updated = !t.lastPushed.empty() && t.lastPushed != it->second;
                } else if (auto pushed = parse_timestamp(t.lastPushed)) {
                    updated = *pushed > times[i - 1];
                }
                if (!updated)
                    continue;
                ++p.updates;
                p.dataVolume += t.byteSize;
                if (!t.pusherName.empty())
                    users.insert(t.pusherName);
            }
        }
        p.activeUsers = users.size();
        out.activity.push_back(p);
    }
    return out;
}

std::string trends_to_json(const TrendStats& t, int indent)
{
    json dist = json::object();
    for (const auto& [a, s] : t.archDistribution)
        dist[a] = {{"count", s.count}, {"share", s.share}};
    json growth = json::object();
    for (const auto& [a, g] : t.perArchMonthlyGrowth)
        growth[a] = g;
    json updates = json::array(), volume = json::array(), users = json::array();
    for (const auto& p : t.activity) {
        updates.push_back({{"date", p.date}, {"value", p.updates}});
        volume.push_back({{"date", p.date}, {"value", p.dataVolume}});
        users.push_back({{"date", p.date}, {"value", p.activeUsers}});
    }
    json j{{"archDistribution", dist},
           {"perArchMonthlyGrowth", growth},
           {"updatesPerDay", updates},
           {"dataVolumePerDay", volume},
           {"activeUsersPerDay", users},
           {"notes", t.notes}};
    return j.dump(indent);
}

std::string trends_to_csv(const TrendStats& t)
{
    std::ostringstream out;
    out.precision(17);
    out << "metric,key,value\n";
    for (const auto& [a, s] : t.archDistribution) {
        out << "archCount," << a << "," << s.count << "\n";
        out << "archShare," << a << "," << s.share << "\n";
    }
    for (const auto& [a, g] : t.perArchMonthlyGrowth)
        out << "monthlyGrowthPercent," << a << "," << g << "\n";
    for (const auto& p : t.activity) {
        out << "updatesPerDay," << p.date << "," << p.updates << "\n";
        out << "dataVolumePerDay," << p.date << "," << p.dataVolume << "\n";
        out << "activeUsersPerDay," << p.date << "," << p.activeUsers << "\n";
    }
    return out.str();
}

} // namespace hwdock
