#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clock.hpp"
#include "http.hpp"
#include "rate_limiter.hpp"
#include "registry.hpp"

namespace hwdock {

struct TagSummary {
    std::string              tag;
    std::vector<std::string> architectures; // sorted, unique
    std::vector<std::string> osList;        // sorted, unique
    std::uint64_t            byteSize = 0;
    std::string              lastPushed; // ISO-8601 UTC, may be empty
    std::string              pusherName;
    bool operator==(const TagSummary&) const = default;
};

struct RepoRecord {
    /// "<namespace>/<repo>", unique within a snapshot.
    std::string             name;
    std::string             ns;
    std::string             lastUpdated;
    std::uint64_t           starCount = 0;
    std::uint64_t           pullCount = 0;
    std::vector<TagSummary> tagSummaries; // sorted by tag
    bool operator==(const RepoRecord&) const = default;
};

struct Absence {
    std::string name;
    std::string reason;
    bool operator==(const Absence&) const = default;
};

struct Snapshot {
    std::string             takenAt; // ISO-8601 UTC, second precision
    std::vector<RepoRecord> records; // sorted by name
    std::vector<Absence>    absences;
    std::string             sourceNote;
    bool                    partial = false;
    bool operator==(const Snapshot&) const = default;
};

struct HubConfig {
    std::string                baseUrl = "https://hub.docker.com";
    std::optional<std::string> authToken;
    RetryPolicy                retry;
    unsigned                   width    = 4;
    unsigned                   pageSize = 100;
};

/// Client for the hub's repository/tag listing API. Every request is
/// charged to the (possibly shared) rate limiter.
class HubClient {
public:
    HubClient(HubConfig config, std::shared_ptr<HttpTransport> transport, std::shared_ptr<Clock> clock,
              std::shared_ptr<RateLimiter> limiter);

    /// Repository names ("ns/repo") of a namespace; nullopt when it does not exist.
    std::optional<std::vector<std::string>> list_namespace(const std::string& ns);
    /// Repository metadata plus every tag; nullopt when absent.
    std::optional<RepoRecord> fetch_repo(const std::string& fullName);

    RateLimiter&     limiter() { return *mLimiter; }
    Clock&           clock() { return *mClock; }
    const HubConfig& config() const { return mConfig; }

private:
    /// Follows "next" links; nullopt on 404.
    std::optional<std::vector<std::string>> get_pages(const std::string& firstUrl);
    std::string                             absolute(const std::string& url) const;

    HubConfig                      mConfig;
    std::shared_ptr<HttpTransport> mTransport;
    std::shared_ptr<Clock>         mClock;
    std::shared_ptr<RateLimiter>   mLimiter;
};

/// "nginx" -> "library/nginx"; names with a namespace are kept.
std::string normalize_repo_name(const std::string& name);

struct Expansion {
    std::vector<std::string> repos;
    /// Names whose sister-organization probe failed, with the reason.
    std::vector<Absence> failures;
};

/// Two-tier sample: each official repo followed by the repositories of the
/// same-named organization when it exists. Deduplicated, order stable.
Expansion expand_sample(const std::vector<std::string>& seed, HubClient& hub);

/// Seed file: one repository name per line; '#' starts a comment.
std::vector<std::string> read_seed_file(const std::string& path);

/// One record per reachable repo; unreachable ones become absences. A rate
/// budget stop marks the snapshot partial.
Snapshot take_snapshot(const std::vector<std::string>& repos, HubClient& hub, const std::string& sourceNote = {});

std::string snapshot_to_json(const Snapshot& s, int indent = 2);
Snapshot    snapshot_from_json(std::string_view text);

/// Append-only store: <dir>/<YYYY-MM-DD>/snapshot-<YYYYMMDDTHHMMSSZ>.json.
/// Rejects a takenAt not after the newest stored snapshot. Returns the path.
std::string save_snapshot(const std::string& dir, const Snapshot& s);
/// All stored snapshots ordered by takenAt.
std::vector<Snapshot> load_snapshots(const std::string& dir);

/// ISO-8601 UTC text for a time point (second precision).
std::string format_timestamp(TimePoint t);
/// Parses "YYYY-MM-DDTHH:MM:SS[.frac][Z|+00:00]"; nullopt when malformed.
std::optional<TimePoint> parse_timestamp(std::string_view text);

struct ArchShare {
    std::uint64_t count = 0;
    double        share = 0;
};

struct ActivityPoint {
    std::string   date; // YYYY-MM-DD of the later snapshot
    std::uint64_t updates     = 0;
    std::uint64_t dataVolume  = 0;
    std::uint64_t activeUsers = 0;
};

struct TrendStats {
    std::map<std::string, ArchShare> archDistribution;
    /// Percent per month.
    std::map<std::string, double> perArchMonthlyGrowth;
    std::vector<ActivityPoint>    activity;
    std::vector<std::string>      notes;
};

/// Distribution over (repo, tag, architecture) triples of the latest
/// snapshot; growth as the geometric mean of month-over-month factors of the
/// per-architecture counts (last snapshot of each calendar month); activity
/// from tags whose lastPushed changed between consecutive snapshots.
TrendStats compute_trends(const std::vector<Snapshot>& snapshots);

std::string trends_to_json(const TrendStats& t, int indent = 2);
std::string trends_to_csv(const TrendStats& t);

} // namespace hwdock
