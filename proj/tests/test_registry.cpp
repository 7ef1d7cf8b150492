#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "hwdock/acquisition.hpp"
#include "hwdock/digest.hpp"
#include "hwdock/error.hpp"
#include "hwdock/registry.hpp"
#include "support/fixture_registry.hpp"
#include "support/image_builder.hpp"

using namespace hwdock;
using namespace std::chrono_literals;
using hwdock::testing::FixtureRegistry;
using hwdock::testing::LayerBuilder;

namespace {

constexpr const char* kHelloDigest = "sha256:2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824";
constexpr const char* kEmptyDigest = "sha256:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";

struct Harness {
    FixtureRegistry               registry;
    std::shared_ptr<VirtualClock> clock = std::make_shared<VirtualClock>();

    RegistryClient client(RateBudget budget = {}, bool overHttp = false)
    {
        RegistryConfig cfg;
        cfg.budget  = budget;
        cfg.baseUrl = overHttp ? registry.start() : registry.base_url();
        auto transport = overHttp ? std::shared_ptr<HttpTransport>(std::make_shared<HttplibTransport>(5s))
                                  : registry.transport();
        return RegistryClient(cfg, transport, clock);
    }
};

ErrorKind kind_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::Io;
}

std::string two_platform_index(FixtureRegistry& reg, const std::string& repo)
{
    auto amd = hwdock::testing::make_image({LayerBuilder().file("amd").tar()}, "amd64");
    auto arm = hwdock::testing::make_image({LayerBuilder().file("arm").tar()}, "arm64");
    reg.put_image(repo, "amd64-only", amd);
    reg.put_image(repo, "arm64-only", arm);
    auto idx = hwdock::testing::make_index({{"amd64", "linux", amd.manifestDigest, amd.manifest.size(), {"sse4"}},
                                            {"arm64", "linux", arm.manifestDigest, arm.manifest.size(), {}}});
    reg.put_manifest(repo, "latest", idx);
    return sha256_digest(idx);
}

} // namespace

TEST(Registry, FetchesTwoPlatformIndexInProcess)
{
    Harness h;
    auto    digest = two_platform_index(h.registry, "library/app");
    auto    c      = h.client();
    auto    m      = c.fetch_manifest(resolve_ref("app"));
    EXPECT_EQ(m.doc.kind, ManifestKind::MultiPlatformIndex);
    EXPECT_EQ(m.doc.platformEntries.size(), 2u);
    EXPECT_EQ(m.digest, digest);
    EXPECT_EQ(m.mediaType, media_type::kDockerManifestList);
    EXPECT_EQ(h.registry.request_count(), 1u);
}

TEST(Registry, FetchesOverRealHttp)
{
    Harness h;
    two_platform_index(h.registry, "library/app");
    auto c   = h.client({}, true);
    auto ref = resolve_ref("app");
    auto m   = c.fetch_manifest(ref);
    EXPECT_EQ(m.doc.platformEntries.size(), 2u);
    auto img = pull_image(c, ref, {"arm64", "linux"});
    EXPECT_EQ(img.architecture, "arm64");
    ASSERT_EQ(img.layers.size(), 1u);
    EXPECT_EQ(img.layers[0].entries.at(0).path, "arm");
}

TEST(Registry, UnknownTagIsNotFound)
{
    Harness h;
    two_platform_index(h.registry, "library/app");
    auto c = h.client();
    try {
        c.fetch_manifest(resolve_ref("app:nope"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFound);
        EXPECT_NE(std::string(e.what()).find("image or tag absent"), std::string::npos);
    }
}

TEST(Registry, BudgetOfOneStopsSecondCallWithoutTraffic)
{
    Harness h;
    two_platform_index(h.registry, "library/app");
    auto c = h.client({1, std::chrono::seconds(6 * 3600)});
    c.fetch_manifest(resolve_ref("app"));
    EXPECT_EQ(h.registry.request_count(), 1u);
    try {
        c.fetch_manifest(resolve_ref("app"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BudgetExhausted);
        EXPECT_NE(std::string(e.what()).find("rate budget exhausted, retry after 21600s"), std::string::npos) << e.what();
    }
    EXPECT_EQ(h.registry.request_count(), 1u);
    h.clock->advance(std::chrono::seconds(6 * 3600));
    EXPECT_NO_THROW(c.fetch_manifest(resolve_ref("app")));
    EXPECT_EQ(h.registry.request_count(), 2u);
}

TEST(Registry, TokenHandshakeOnceThenReused)
{
    Harness h;
    two_platform_index(h.registry, "library/app");
    h.registry.require_token("s3cret");
    auto c = h.client();
    EXPECT_NO_THROW(c.fetch_manifest(resolve_ref("app")));
    EXPECT_NO_THROW(c.fetch_manifest(resolve_ref("app:amd64-only")));
    EXPECT_EQ(h.registry.token_requests(), 1u);
    // challenged request, resend, then the reused token
    EXPECT_EQ(h.registry.request_count(), 3u);
}

TEST(Registry, RejectedTokenIsAuthRequired)
{
    Harness h;
    two_platform_index(h.registry, "library/app");
    h.registry.require_token("s3cret");
    h.registry.issue_token("wrong");
    auto c = h.client();
    try {
        c.fetch_manifest(resolve_ref("app"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::AuthRequired);
        EXPECT_NE(std::string(e.what()).find("auth required"), std::string::npos);
    }
    EXPECT_EQ(h.registry.token_requests(), 1u);
}

TEST(Registry, RetriesWithExponentialBackoff)
{
    Harness h;
    two_platform_index(h.registry, "library/app");
    h.registry.fail_next(2, 503);
    auto c = h.client();
    EXPECT_NO_THROW(c.fetch_manifest(resolve_ref("app")));
    EXPECT_EQ(h.registry.request_count(), 3u);
    EXPECT_EQ(h.clock->total_slept(), Duration(3s)); // 1s + 2s
}

TEST(Registry, GivesUpAfterThreeRetries)
{
    Harness h;
    two_platform_index(h.registry, "library/app");
    h.registry.fail_next(10, 500);
    auto c = h.client();
    EXPECT_EQ(kind_of([&] { c.fetch_manifest(resolve_ref("app")); }), ErrorKind::Network);
    EXPECT_EQ(h.registry.request_count(), 4u);
    EXPECT_EQ(h.clock->total_slept(), Duration(7s)); // 1s + 2s + 4s
    EXPECT_EQ(c.limiter().granted(), 4u);
}

TEST(Registry, HelloBlob)
{
    Harness h;
    auto    d = h.registry.put_blob("library/app", to_bytes("hello"));
    EXPECT_EQ(d, kHelloDigest);
    auto c    = h.client();
    auto blob = c.fetch_blob(resolve_ref("app"), kHelloDigest);
    EXPECT_EQ(blob.size(), 5u);
    EXPECT_EQ(std::string(as_string(blob)), "hello");
}

TEST(Registry, TamperedBlobIsIntegrityError)
{
    Harness h;
    h.registry.put_blob_as("library/app", kHelloDigest, to_bytes("hellp"));
    auto c = h.client();
    try {
        c.fetch_blob(resolve_ref("app"), kHelloDigest);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Integrity);
        std::string msg = e.what();
        EXPECT_NE(msg.find(kHelloDigest), std::string::npos);
        EXPECT_NE(msg.find(sha256_digest(to_bytes("hellp"))), std::string::npos);
    }
}

TEST(Registry, EmptyBlob)
{
    Harness h;
    EXPECT_EQ(h.registry.put_blob("library/app", {}), kEmptyDigest);
    auto c = h.client();
    EXPECT_TRUE(c.fetch_blob(resolve_ref("app"), kEmptyDigest).empty());
}

TEST(Registry, MalformedDigestRejectedWithoutTraffic)
{
    Harness h;
    auto    c = h.client();
    EXPECT_EQ(kind_of([&] { c.fetch_blob(resolve_ref("app"), "sha256:xyz"); }), ErrorKind::Validation);
    EXPECT_EQ(h.registry.request_count(), 0u);
}

TEST(Registry, DigestReferenceMustMatchBody)
{
    Harness h;
    two_platform_index(h.registry, "library/app");
    auto other = std::string("sha256:") + std::string(64, 'f');
    h.registry.put_manifest("library/app", other, hwdock::testing::make_image({to_bytes("x")}).manifest);
    auto c = h.client();
    EXPECT_EQ(kind_of([&] { c.fetch_manifest(resolve_ref("app@" + other)); }), ErrorKind::Integrity);
}

TEST(Registry, ListTagsFollowsPagination)
{
    Harness h;
    auto    img = hwdock::testing::make_image({to_bytes("x")});
    for (auto t : {"v1", "v2", "v3", "v4", "v5"})
        h.registry.put_image("org/app", t, img);
    h.registry.set_tag_page_size(2);
    auto c    = h.client();
    auto tags = c.list_tags(resolve_ref("org/app"));
    EXPECT_EQ(tags, (std::vector<std::string>{"v1", "v2", "v3", "v4", "v5"}));
    EXPECT_EQ(h.registry.request_count(), 3u);
}

TEST(Registry, ParallelBlobFetchKeepsOrder)
{
    Harness                  h;
    std::vector<std::string> digests;
    for (int i = 0; i < 12; ++i)
        digests.push_back(h.registry.put_blob("library/app", to_bytes("blob " + std::to_string(i))));
    auto c     = h.client();
    auto blobs = c.fetch_blobs(resolve_ref("app"), digests);
    ASSERT_EQ(blobs.size(), 12u);
    for (int i = 0; i < 12; ++i)
        EXPECT_EQ(std::string(as_string(blobs[i])), "blob " + std::to_string(i));
    EXPECT_EQ(c.limiter().granted(), 12u);
}

TEST(Registry, ParallelFetchNeverExceedsBudget)
{
    Harness                  h;
    std::vector<std::string> digests;
    for (int i = 0; i < 10; ++i)
        digests.push_back(h.registry.put_blob("library/app", to_bytes("b" + std::to_string(i))));
    auto c = h.client({6, 3600s});
    EXPECT_EQ(kind_of([&] { c.fetch_blobs(resolve_ref("app"), digests); }), ErrorKind::BudgetExhausted);
    EXPECT_LE(h.registry.request_count(), 6u);
}

TEST(RateLimiterProperty, NeverExceedsBudgetInAnyWindow)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        auto        clock = std::make_shared<VirtualClock>();
        std::size_t max   = 1 + rng() % 10;
        auto        win   = std::chrono::seconds(10 + rng() % 100);
        RateLimiter limiter({max, win}, clock);
        std::vector<TimePoint> grants;
        for (int i = 0; i < 400; ++i) {
            clock->advance(std::chrono::milliseconds(rng() % 5000));
            auto wait = limiter.try_acquire();
            if (!wait)
                grants.push_back(clock->now());
            else
                EXPECT_GT(*wait, Duration::zero());
        }
        // oracle: every run of max+1 consecutive grants spans at least one window
        for (std::size_t i = max; i < grants.size(); ++i)
            EXPECT_GE(grants[i] - grants[i - max], Duration(win));
        EXPECT_EQ(limiter.granted(), grants.size());
    }
}

TEST(RateLimiter, WaitPointsAtOldestGrantExpiry)
{
    auto        clock = std::make_shared<VirtualClock>();
    RateLimiter limiter({2, 100s}, clock);
    EXPECT_FALSE(limiter.try_acquire());
    clock->advance(30s);
    EXPECT_FALSE(limiter.try_acquire());
    clock->advance(10s);
    auto wait = limiter.try_acquire();
    ASSERT_TRUE(wait);
    EXPECT_EQ(*wait, Duration(60s));
    clock->advance(*wait);
    EXPECT_FALSE(limiter.try_acquire());
}

TEST(BlobCache, StoresVerifiesAndDropsCorruptEntries)
{
    auto dir = std::filesystem::temp_directory_path() / ("hwdock-cache-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    BlobCache cache(dir.string());
    EXPECT_FALSE(cache.get(kHelloDigest));
    cache.put(kHelloDigest, to_bytes("hello"));
    ASSERT_TRUE(cache.get(kHelloDigest));
    EXPECT_EQ(std::string(as_string(*cache.get(kHelloDigest))), "hello");
    EXPECT_THROW(cache.put(kEmptyDigest, to_bytes("not empty")), Error);
    write_file(cache.path_for(kHelloDigest), to_bytes("corrupt"));
    EXPECT_FALSE(cache.get(kHelloDigest));
    EXPECT_FALSE(std::filesystem::exists(cache.path_for(kHelloDigest)));
    std::filesystem::remove_all(dir);
}

TEST(Acquisition, PullUsesCacheOnSecondRun)
{
    Harness h;
    two_platform_index(h.registry, "library/app");
    auto dir = std::filesystem::temp_directory_path() / ("hwdock-pull-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    BlobCache cache(dir.string());
    auto      c = h.client();
    pull_image(c, resolve_ref("app"), {"amd64", "linux"}, &cache);
    auto first = h.registry.request_count();
    auto again = pull_image(c, resolve_ref("app"), {"amd64", "linux"}, &cache);
    // index and platform manifest again, config and layer from the cache
    EXPECT_EQ(h.registry.request_count() - first, 2u);
    EXPECT_EQ(again.layers.size(), 1u);
    std::filesystem::remove_all(dir);
}

TEST(Acquisition, PullNeverFallsBackToOtherArchitecture)
{
    Harness h;
    two_platform_index(h.registry, "library/app");
    auto c = h.client();
    try {
        pull_image(c, resolve_ref("app"), {"s390x", "linux"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFound);
        std::string msg = e.what();
        EXPECT_NE(msg.find("amd64/linux"), std::string::npos) << msg;
        EXPECT_NE(msg.find("arm64/linux"), std::string::npos) << msg;
    }
}
