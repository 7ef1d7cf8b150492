#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bytes.hpp"
#include "clock.hpp"
#include "http.hpp"
#include "image_ref.hpp"
#include "manifest.hpp"
#include "rate_limiter.hpp"

namespace hwdock {

struct RetryPolicy {
    /// Retries after the first attempt; waits backoffBase * 2^i.
    int                       maxRetries = 3;
    std::chrono::milliseconds backoffBase{1000};
};

/// One GET charged to `limiter` per attempt (checked before sending);
/// network failures, 5xx and 429 are retried per `policy`.
HttpResponse budgeted_get(HttpTransport& transport, RateLimiter& limiter, Clock& clock, const RetryPolicy& policy,
                          const std::string& url, const HttpHeaders& headers);

struct RegistryConfig {
    /// Overrides https://<ref.registry> (fixture servers, mirrors).
    std::string                baseUrl;
    std::optional<std::string> authToken;
    RateBudget                 budget;
    std::chrono::milliseconds  timeout{30000};
    /// Retries after the first attempt; waits backoffBase * 2^i.
    int                       maxRetries = 3;
    std::chrono::milliseconds backoffBase{1000};
    unsigned                  fetchWidth = 4;
};

struct ManifestResult {
    ManifestDoc doc;
    std::string digest;
    std::string mediaType;
    Bytes       raw;
};

/// Registry HTTP API v2 client (pull side only). Every manifest, blob and
/// tag-list request is charged to the shared RateLimiter before it is sent;
/// safe to share across threads.
class RegistryClient {
public:
    RegistryClient(RegistryConfig config, std::shared_ptr<HttpTransport> transport, std::shared_ptr<Clock> clock,
                   std::shared_ptr<RateLimiter> limiter = nullptr);

    /// GET /v2/<name>/manifests/<ref>. `reference` overrides the ref's tag
    /// or digest.
    ManifestResult fetch_manifest(const ImageRef& ref, const std::optional<std::string>& reference = std::nullopt);

    /// GET /v2/<name>/blobs/<digest>, verified against the digest.
    Bytes fetch_blob(const ImageRef& ref, const std::string& digest);

    /// Fetches up to config.fetchWidth blobs at a time; output order matches.
    std::vector<Bytes> fetch_blobs(const ImageRef& ref, const std::vector<std::string>& digests);

    /// GET /v2/<name>/tags/list, following Link pagination.
    std::vector<std::string> list_tags(const ImageRef& ref);

    RateLimiter&          limiter() { return *mLimiter; }
    const RegistryConfig& config() const { return mConfig; }

private:
    HttpResponse request(const ImageRef& ref, const std::string& url, const HttpHeaders& extra, bool charge = true);
    HttpResponse send_with_retry(const std::string& url, const HttpHeaders& headers);
    std::optional<std::string> handshake(const std::string& challenge);
    std::string                base_url(const ImageRef& ref) const;

    RegistryConfig                 mConfig;
    std::shared_ptr<HttpTransport> mTransport;
    std::shared_ptr<Clock>         mClock;
    std::shared_ptr<RateLimiter>   mLimiter;
    std::mutex                     mTokenMutex;
    std::map<std::string, std::string> mTokens; // repository -> bearer token
};

/// Digest-keyed blob store under <dir>/blobs/sha256/<hex>.
class BlobCache {
public:
    explicit BlobCache(std::string dir)
        : mDir(std::move(dir))
    {
    }

    /// Verified content, or nullopt (corrupt entries are removed).
    std::optional<Bytes> get(const std::string& digest) const;
    void                 put(const std::string& digest, ByteView data) const;
    std::string          path_for(const std::string& digest) const;

private:
    std::string mDir;
};

} // namespace hwdock
