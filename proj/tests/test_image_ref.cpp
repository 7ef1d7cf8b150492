#include <gtest/gtest.h>

#include "hwdock/error.hpp"
#include "hwdock/image_ref.hpp"

using namespace hwdock;

TEST(ImageRef, BareNameGetsOfficialDefaults)
{
    auto r = resolve_ref("nginx");
    EXPECT_EQ(r.registry, kOfficialRegistry);
    EXPECT_EQ(r.repository, "library/nginx");
    EXPECT_EQ(r.tag, "latest");
    EXPECT_FALSE(r.digest);
}

TEST(ImageRef, RegistryRepoAndTag)
{
    auto r = resolve_ref("example.com/a/b:v1");
    EXPECT_EQ(r.registry, "example.com");
    EXPECT_EQ(r.repository, "a/b");
    EXPECT_EQ(r.tag, "v1");
}

TEST(ImageRef, RegistryWithPort)
{
    auto r = resolve_ref("localhost:5000/team/app");
    EXPECT_EQ(r.registry, "localhost:5000");
    EXPECT_EQ(r.repository, "team/app");
    EXPECT_EQ(r.tag, "latest");
}

TEST(ImageRef, DigestReference)
{
    std::string d = "sha256:" + std::string(64, 'a');
    auto        r = resolve_ref("nginx@" + d);
    EXPECT_EQ(r.repository, "library/nginx");
    EXPECT_EQ(r.digest, d);
    EXPECT_FALSE(r.tag);
    EXPECT_EQ(r.reference(), d);
}

TEST(ImageRef, NamespacedHubNameKeepsNamespace)
{
    auto r = resolve_ref("sconecuratedimages/apps:python");
    EXPECT_EQ(r.registry, kOfficialRegistry);
    EXPECT_EQ(r.repository, "sconecuratedimages/apps");
    EXPECT_EQ(r.tag, "python");
}

TEST(ImageRef, DockerIoAliasesMapToOfficialHost)
{
    EXPECT_EQ(resolve_ref("docker.io/library/redis").registry, kOfficialRegistry);
    EXPECT_EQ(resolve_ref("docker.io/redis").repository, "library/redis");
}

TEST(ImageRef, EmptyIsRejected)
{
    try {
        resolve_ref("");
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "empty reference");
    }
}

TEST(ImageRef, TagAndDigestTogetherAreRejected)
{
    EXPECT_THROW(resolve_ref("nginx:1.19@sha256:" + std::string(64, 'b')), Error);
}

TEST(ImageRef, MalformedInputsAreRejected)
{
    EXPECT_THROW(resolve_ref("Upper/Case"), Error);
    EXPECT_THROW(resolve_ref("nginx@sha256:short"), Error);
    EXPECT_THROW(resolve_ref("nginx:"), Error);
}

TEST(ImageRef, ToStringRoundTrips)
{
    for (std::string text : {"example.com/a/b:v1", "localhost:5000/x:y"}) {
        auto r = resolve_ref(text);
        EXPECT_EQ(resolve_ref(r.to_string()).repository, r.repository);
        EXPECT_EQ(resolve_ref(r.to_string()).tag, r.tag);
        EXPECT_EQ(resolve_ref(r.to_string()).registry, r.registry);
    }
}
