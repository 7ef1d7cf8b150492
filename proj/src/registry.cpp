#include "hwdock/registry.hpp"

#include <atomic>
#include <filesystem>
#include <thread>

#include <json.hpp>

#include "hwdock/digest.hpp"
#include "hwdock/error.hpp"
#include "hwdock/feature_names.hpp"

namespace hwdock {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_seconds(Duration d)
{
    auto s = std::chrono::duration_cast<std::chrono::seconds>(d + std::chrono::nanoseconds(999'999'999)).count();
    return std::to_string(s) + "s";
}

std::map<std::string, std::string> parse_challenge(const std::string& header, std::string& scheme)
{
    std::map<std::string, std::string> params;
    auto                               sp = header.find(' ');
    scheme                                = header.substr(0, sp);
    if (sp == std::string::npos)
        return params;
    std::string rest = header.substr(sp + 1);
    std::size_t i    = 0;
    while (i < rest.size()) {
        while (i < rest.size() && (rest[i] == ' ' || rest[i] == ','))
            ++i;
        auto eq = rest.find('=', i);
        if (eq == std::string::npos)
            break;
        std::string key = rest.substr(i, eq - i);
        std::string value;
        i = eq + 1;
        if (i < rest.size() && rest[i] == '"') {
            auto close = rest.find('"', i + 1);
            if (close == std::string::npos)
                close = rest.size();
            value = rest.substr(i + 1, close - i - 1);
            i     = close + 1;
        } else {
            auto comma = rest.find(',', i);
            if (comma == std::string::npos)
                comma = rest.size();
            value = rest.substr(i, comma - i);
            i     = comma;
        }
        params[key] = value;
    }
    return params;
}

bool retryable(int status)
{
    return status == 429 || status >= 500;
}

std::string next_link(const std::string& link)
{
    // <url>; rel="next"
    auto lt = link.find('<');
    auto gt = link.find('>');
    if (lt == std::string::npos || gt == std::string::npos || gt < lt)
        return {};
    if (link.find("rel=\"next\"", gt) == std::string::npos && link.find("rel=next", gt) == std::string::npos)
        return {};
    return link.substr(lt + 1, gt - lt - 1);
}

} // namespace

RegistryClient::RegistryClient(RegistryConfig config, std::shared_ptr<HttpTransport> transport,
                               std::shared_ptr<Clock> clock, std::shared_ptr<RateLimiter> limiter)
    : mConfig(std::move(config))
    , mTransport(std::move(transport))
    , mClock(std::move(clock))
    , mLimiter(limiter ? std::move(limiter) : std::make_shared<RateLimiter>(mConfig.budget, mClock))
{
}

std::string RegistryClient::base_url(const ImageRef& ref) const
{
    std::string base = mConfig.baseUrl.empty() ? "https://" + ref.registry : mConfig.baseUrl;
    while (base.ends_with('/'))
        base.pop_back();
    return base;
}

HttpResponse budgeted_get(HttpTransport& transport, RateLimiter& limiter, Clock& clock, const RetryPolicy& policy,
                          const std::string& url, const HttpHeaders& headers)
{
    for (int attempt = 0;; ++attempt) {
        if (auto wait = limiter.try_acquire())
            throw Error(ErrorKind::BudgetExhausted, "rate budget exhausted, retry after " + format_seconds(*wait));
        std::string failure;
        try {
            auto resp = transport.get(url, headers);
            if (!retryable(resp.status))
                return resp;
            failure = "HTTP " + std::to_string(resp.status);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Network)
                throw;
            failure = e.what();
        }
        if (attempt >= policy.maxRetries)
            throw Error(ErrorKind::Network,
                        "GET " + url + " failed after " + std::to_string(attempt + 1) + " attempts: " + failure);
        clock.sleep_for(policy.backoffBase * (1 << attempt));
    }
}

HttpResponse RegistryClient::send_with_retry(const std::string& url, const HttpHeaders& headers)
{
    return budgeted_get(*mTransport, *mLimiter, *mClock, {mConfig.maxRetries, mConfig.backoffBase}, url, headers);
}

std::optional<std::string> RegistryClient::handshake(const std::string& challenge)
{
    std::string scheme;
    auto        params = parse_challenge(challenge, scheme);
    if (lowercase(scheme) != "bearer" || !params.contains("realm"))
        return std::nullopt;
    std::string url = params["realm"];
    std::string sep = url.find('?') == std::string::npos ? "?" : "&";
    if (params.contains("service")) {
        url += sep + "service=" + url_encode(params["service"]);
        sep = "&";
    }
    if (params.contains("scope"))
        url += sep + "scope=" + url_encode(params["scope"]);

    HttpResponse resp;
    try {
        resp = mTransport->get(url, {});
    } catch (const Error&) {
        return std::nullopt;
    }
    if (resp.status != 200)
        return std::nullopt;
    try {
        auto j = json::parse(resp.body);
        if (j.contains("token") && j["token"].is_string())
            return j["token"].get<std::string>();
        if (j.contains("access_token") && j["access_token"].is_string())
            return j["access_token"].get<std::string>();
    } catch (const json::exception&) {
    }
    return std::nullopt;
}

HttpResponse RegistryClient::request(const ImageRef& ref, const std::string& url, const HttpHeaders& extra, bool)
{
    auto with_auth = [&] {
        HttpHeaders h = extra;
        std::lock_guard lock(mTokenMutex);
        if (auto it = mTokens.find(ref.repository); it != mTokens.end())
            h.emplace_back("Authorization", "Bearer " + it->second);
        else if (mConfig.authToken)
            h.emplace_back("Authorization", "Bearer " + *mConfig.authToken);
        return h;
    };

    auto resp = send_with_retry(url, with_auth());
    if (resp.status != 401)
        return resp;

    auto challenge = resp.header("www-authenticate");
    if (auto token = handshake(challenge)) {
        {
            std::lock_guard lock(mTokenMutex);
            mTokens[ref.repository] = *token;
        }
        resp = send_with_retry(url, with_auth());
        if (resp.status != 401)
            return resp;
    }
    throw Error(ErrorKind::AuthRequired, "auth required for " + ref.repository);
}

ManifestResult RegistryClient::fetch_manifest(const ImageRef& ref, const std::optional<std::string>& reference)
{
    std::string refText = reference.value_or(ref.reference());
    std::string url     = base_url(ref) + "/v2/" + ref.repository + "/manifests/" + refText;
    std::string accept  = std::string(media_type::kDockerManifestList) + ", " + std::string(media_type::kOciIndex) + ", " +
                         std::string(media_type::kDockerManifest) + ", " + std::string(media_type::kOciManifest);

    auto resp = request(ref, url, {{"Accept", accept}});
    if (resp.status == 404)
        throw Error(ErrorKind::NotFound, "image or tag absent: " + ref.repository + ":" + refText);
    if (resp.status != 200)
        throw Error(ErrorKind::Network, "GET " + url + " returned HTTP " + std::to_string(resp.status));

    ManifestResult out;
    out.raw    = to_bytes(resp.body);
    out.doc    = parse_manifest(out.raw);
    out.digest = out.doc.rawDigest;
    if (is_valid_digest(refText) && refText != out.digest)
        throw Error(ErrorKind::Integrity, "manifest digest mismatch: expected " + refText + ", actual " + out.digest);
    auto ct       = resp.header("content-type");
    out.mediaType = ct.substr(0, ct.find(';'));
    if (out.mediaType.empty() || out.mediaType == "application/json")
        out.mediaType = out.doc.mediaType;
    return out;
}

Bytes RegistryClient::fetch_blob(const ImageRef& ref, const std::string& digest)
{
    if (!is_valid_digest(digest))
        throw Error(ErrorKind::Validation, "malformed digest: " + digest);
    std::string url  = base_url(ref) + "/v2/" + ref.repository + "/blobs/" + digest;
    auto        resp = request(ref, url, {});
    if (resp.status == 404)
        throw Error(ErrorKind::NotFound, "blob absent: " + digest);
    if (resp.status != 200)
        throw Error(ErrorKind::Network, "GET " + url + " returned HTTP " + std::to_string(resp.status));
    auto actual = sha256_digest(as_bytes(resp.body));
    if (actual != digest)
        throw Error(ErrorKind::Integrity, "blob digest mismatch: expected " + digest + ", actual " + actual);
    return to_bytes(resp.body);
}

std::vector<Bytes> RegistryClient::fetch_blobs(const ImageRef& ref, const std::vector<std::string>& digests)
{
    std::vector<Bytes>       out(digests.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr       failure;
    std::mutex               failureMutex;
    unsigned                 width = std::max(1u, std::min<unsigned>(mConfig.fetchWidth, static_cast<unsigned>(digests.size())));
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < width; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < digests.size(); i = next++) {
                {
                    std::lock_guard lock(failureMutex);
                    if (failure)
                        return;
                }
                try {
                    out[i] = fetch_blob(ref, digests[i]);
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

std::vector<std::string> RegistryClient::list_tags(const ImageRef& ref)
{
    std::vector<std::string> tags;
    std::string              base = base_url(ref);
    std::string              url  = base + "/v2/" + ref.repository + "/tags/list";
    while (!url.empty()) {
        auto resp = request(ref, url, {{"Accept", "application/json"}});
        if (resp.status == 404)
            throw Error(ErrorKind::NotFound, "repository absent: " + ref.repository);
        if (resp.status != 200)
            throw Error(ErrorKind::Network, "GET " + url + " returned HTTP " + std::to_string(resp.status));
        try {
            auto j = json::parse(resp.body);
            if (j.contains("tags") && j["tags"].is_array())
                for (const auto& t : j["tags"])
                    if (t.is_string())
                        tags.push_back(t.get<std::string>());
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Parse, std::string("malformed tag list: ") + e.what());
        }
        auto next = next_link(resp.header("link"));
        url       = next.empty() ? std::string{} : (next.starts_with("http") ? next : base + next);
    }
    return tags;
}

std::string BlobCache::path_for(const std::string& digest) const
{
    return (fs::path(mDir) / "blobs" / "sha256" / std::string(digest_hex(digest))).string();
}

std::optional<Bytes> BlobCache::get(const std::string& digest) const
{
    if (!is_valid_digest(digest))
        return std::nullopt;
    auto            p = path_for(digest);
    std::error_code ec;
    if (!fs::exists(p, ec))
        return std::nullopt;
    auto data = read_file(p);
    if (sha256_digest(data) != digest) {
        fs::remove(p, ec);
        return std::nullopt;
    }
    return data;
}

void BlobCache::put(const std::string& digest, ByteView data) const
{
    if (!is_valid_digest(digest) || sha256_digest(data) != digest)
        throw Error(ErrorKind::Integrity, "refusing to cache content that does not match " + digest);
    auto p   = fs::path(path_for(digest));
    fs::create_directories(p.parent_path());
    auto tmp = p;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    write_file(tmp.string(), data);
    fs::rename(tmp, p);
}

} // namespace hwdock
