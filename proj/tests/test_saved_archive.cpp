#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>

#include "hwdock/acquisition.hpp"
#include "hwdock/digest.hpp"
#include "hwdock/error.hpp"
#include "hwdock/gzip.hpp"
#include "hwdock/tar.hpp"
#include "support/fixture_registry.hpp"
#include "support/image_builder.hpp"

using namespace hwdock;
using hwdock::testing::LayerBuilder;
using nlohmann::json;

namespace {

std::vector<Bytes> two_layers()
{
    return {LayerBuilder().dir("etc").file("etc/os-release", "ID=test").tar(),
            LayerBuilder().file("app/run.sh", "#!/bin/sh").char_device("dev/isgx", 10, 231).tar()};
}

ErrorKind kind_of(const std::function<void()>& f, std::string* message = nullptr)
{
    try {
        f();
    } catch (const Error& e) {
        if (message)
            *message = e.what();
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::Io;
}

/// OCI image layout tar: oci-layout, index.json, blobs/sha256/<hex>.
Bytes oci_layout(const hwdock::testing::ImageBlobs& img, const std::string& name, bool dropFirstLayer = false)
{
    tar::Writer w;
    w.add_file("oci-layout", std::string_view(R"({"imageLayoutVersion":"1.0.0"})"));
    auto add_blob = [&](const Bytes& b) {
        w.add_file("blobs/sha256/" + std::string(digest_hex(sha256_digest(b))), ByteView(b));
    };
    add_blob(img.config);
    for (std::size_t i = 0; i < img.layers.size(); ++i)
        if (!(dropFirstLayer && i == 0))
            add_blob(img.layers[i]);
    add_blob(img.manifest);
    json index = {{"schemaVersion", 2},
                  {"manifests",
                   {{{"mediaType", "application/vnd.oci.image.manifest.v1+json"},
                     {"digest", img.manifestDigest},
                     {"size", img.manifest.size()},
                     {"annotations", {{"org.opencontainers.image.ref.name", name}}}}}}};
    w.add_file("index.json", index.dump());
    return w.finish();
}

} // namespace

TEST(SavedArchive, OneManifestTwoLayers)
{
    auto layers  = two_layers();
    auto archive = parse_saved_archive(write_saved_archive({"demo:1"}, hwdock::testing::image_config(), layers));
    EXPECT_EQ(archive.format, "docker-save");
    ASSERT_EQ(archive.images.size(), 1u);
    const auto& img = archive.images[0];
    EXPECT_EQ(img.repoTags, (std::vector<std::string>{"demo:1"}));
    EXPECT_EQ(img.layerDigests.size(), 2u);
    EXPECT_EQ(img.architecture, "amd64");
    EXPECT_EQ(img.layerDigests[0], sha256_digest(layers[0]));
    EXPECT_EQ(img.layerDigests[1], sha256_digest(layers[1]));
    auto unpacked = archive.layers(img);
    ASSERT_EQ(unpacked.size(), 2u);
    EXPECT_EQ(unpacked[1].entries.size(), 2u);
}

TEST(SavedArchive, MissingLayerIsIncomplete)
{
    auto        layers = two_layers();
    auto        full   = write_saved_archive({"demo:1"}, hwdock::testing::image_config(), layers);
    tar::Writer w;
    auto        dropped = std::string(digest_hex(sha256_digest(layers[1]))) + "/layer.tar";
    tar::for_each_member(full, [&](const tar::Member& m) {
        if (m.path == dropped || m.type != tar::Type::Regular)
            return;
        w.add_file(m.path, ByteView(full).subspan(m.dataOffset, m.size));
    });
    std::string msg;
    EXPECT_EQ(kind_of([&] { parse_saved_archive(w.finish()); }, &msg), ErrorKind::IncompleteArchive);
    EXPECT_NE(msg.find("incomplete archive"), std::string::npos);
    // absent layers are named by digest
    EXPECT_NE(msg.find(sha256_digest(layers[1])), std::string::npos) << msg;
}

TEST(SavedArchive, EmptyTarHasNoManifest)
{
    tar::Writer w;
    std::string msg;
    EXPECT_EQ(kind_of([&] { parse_saved_archive(w.finish()); }, &msg), ErrorKind::Parse);
    EXPECT_EQ(msg, "no manifest found");
}

TEST(SavedArchive, OciLayout)
{
    auto img     = hwdock::testing::make_image(two_layers(), "arm64", "linux", true);
    auto archive = parse_saved_archive(oci_layout(img, "demo:oci"));
    EXPECT_EQ(archive.format, "oci");
    ASSERT_EQ(archive.images.size(), 1u);
    EXPECT_EQ(archive.images[0].architecture, "arm64");
    EXPECT_EQ(archive.images[0].manifestDigest, img.manifestDigest);
    EXPECT_EQ(archive.images[0].repoTags, (std::vector<std::string>{"demo:oci"}));
    EXPECT_EQ(archive.layers(archive.images[0]).size(), 2u);
}

TEST(SavedArchive, OciLayoutMissingBlob)
{
    auto        img = hwdock::testing::make_image(two_layers(), "amd64", "linux", true);
    std::string msg;
    EXPECT_EQ(kind_of([&] { parse_saved_archive(oci_layout(img, "x", true)); }, &msg), ErrorKind::IncompleteArchive);
    EXPECT_NE(msg.find(sha256_digest(img.layers[0])), std::string::npos) << msg;
}

TEST(SavedArchive, GzippedFileLoads)
{
    auto path = std::filesystem::temp_directory_path() / ("hwdock-save-" + std::to_string(::getpid()) + ".tar.gz");
    write_file(path.string(), gzip(write_saved_archive({"demo:1"}, hwdock::testing::image_config(), two_layers())));
    auto archive = load_saved_archive(path.string());
    EXPECT_EQ(archive.images.at(0).layerDigests.size(), 2u);
    std::filesystem::remove(path);
}

TEST(SavedArchive, CompressedLayersKeepTheirDigest)
{
    std::vector<Bytes> layers = {LayerBuilder().file("a", "1").tar_gz(), LayerBuilder().file("b", "2").tar()};
    auto archive = parse_saved_archive(write_saved_archive({"x:1"}, hwdock::testing::image_config(), layers));
    auto unpacked = archive.layers(archive.images[0]);
    EXPECT_EQ(unpacked[0].digest, sha256_digest(layers[0]));
    EXPECT_EQ(unpacked[0].entries.at(0).path, "a");
}

TEST(Acquire, OfflineAndOnlineLayersAreByteIdentical)
{
    auto layers = two_layers();
    auto img    = hwdock::testing::make_image(layers);

    hwdock::testing::FixtureRegistry reg;
    reg.put_image("org/demo", "1", img);
    RegistryConfig cfg;
    cfg.baseUrl = reg.base_url();
    RegistryClient client(cfg, reg.transport(), std::make_shared<VirtualClock>());
    auto           online = pull_image(client, resolve_ref("org/demo:1"), {"amd64", "linux"});

    auto offline = acquire_from_archive(parse_saved_archive(write_saved_archive({"org/demo:1"}, img.config, layers)),
                                        std::nullopt);
    ASSERT_EQ(online.layers.size(), offline.layers.size());
    for (std::size_t i = 0; i < online.layers.size(); ++i) {
        EXPECT_EQ(online.layers[i].digest, offline.layers[i].digest);
        EXPECT_EQ(*online.layers[i].data, *offline.layers[i].data);
        EXPECT_EQ(online.layers[i].entries, offline.layers[i].entries);
    }
    EXPECT_EQ(online.architecture, offline.architecture);
}

TEST(Acquire, MultiImageArchiveNeedsMatchingPlatform)
{
    auto a = hwdock::testing::make_image({LayerBuilder().file("a").tar()}, "amd64", "linux", true);
    auto b = hwdock::testing::make_image({LayerBuilder().file("b").tar()}, "arm64", "linux", true);
    tar::Writer w;
    auto add_blob = [&](const Bytes& blob) {
        w.add_file("blobs/sha256/" + std::string(digest_hex(sha256_digest(blob))), ByteView(blob));
    };
    for (const auto* img : {&a, &b}) {
        add_blob(img->config);
        add_blob(img->layers[0]);
        add_blob(img->manifest);
    }
    auto idx = hwdock::testing::make_index({{"amd64", "linux", a.manifestDigest, a.manifest.size(), {}},
                                            {"arm64", "linux", b.manifestDigest, b.manifest.size(), {}}},
                                           true);
    add_blob(idx);
    w.add_file("index.json",
               json{{"schemaVersion", 2},
                    {"manifests", {{{"mediaType", "application/vnd.oci.image.index.v1+json"},
                                    {"digest", sha256_digest(idx)},
                                    {"size", idx.size()}}}}}
                   .dump());
    auto archive = parse_saved_archive(w.finish());
    ASSERT_EQ(archive.images.size(), 2u);
    auto arm = acquire_from_archive(archive, PlatformQuery{"arm64", "linux"});
    EXPECT_EQ(arm.layers.at(0).entries.at(0).path, "b");
    std::string msg;
    EXPECT_EQ(kind_of([&] { acquire_from_archive(archive, PlatformQuery{"riscv64", "linux"}); }, &msg), ErrorKind::NotFound);
    EXPECT_NE(msg.find("amd64/linux"), std::string::npos) << msg;
}
