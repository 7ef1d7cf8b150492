#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hwdock/error.hpp"
#include "hwdock/glob.hpp"
#include "hwdock/host_probe.hpp"

using namespace hwdock;
namespace fs = std::filesystem;

namespace {

std::string fixture_path(const std::string& name)
{
    return std::string(HWDOCK_SOURCE_DIR) + "/tests/fixtures/" + name;
}

class TempDir {
public:
    TempDir()
    {
        path = fs::temp_directory_path() / ("hwdock-probe-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    void write(const std::string& rel, const std::string& text) const
    {
        fs::create_directories((path / rel).parent_path());
        std::ofstream(path / rel) << text;
    }

    fs::path          path;
    static inline int counter = 0;
};

} // namespace

TEST(HostProbe, SgxFixture)
{
    auto caps = parse_fixture(R"({"architecture":"amd64","os":"linux","cpuFlags":["sse4_2","sgx"],
                                  "devices":["/dev/isgx","/dev/mei0"],"kernelModules":[]})");
    EXPECT_TRUE(caps.cpuFlags.contains("sgx"));
    EXPECT_TRUE(caps.devices.contains("/dev/isgx"));
    EXPECT_TRUE(caps.devices.contains("/dev/mei0"));
    EXPECT_EQ(caps.source, HostCapabilities::Source::Fixture);
    EXPECT_TRUE(sgx_available(caps));
}

TEST(HostProbe, EmptyListsAreValid)
{
    auto caps = parse_fixture(R"({"architecture":"amd64","os":"linux","cpuFlags":[],"devices":[],"kernelModules":[]})");
    EXPECT_TRUE(caps.cpuFlags.empty());
    EXPECT_TRUE(caps.devices.empty());
    EXPECT_TRUE(caps.kernelModules.empty());
}

TEST(HostProbe, DuplicatesAndCaseAreNormalized)
{
    auto caps = parse_fixture(R"({"architecture":"amd64","os":"linux","cpuFlags":["SGX","sgx","sse4_2","sse4_2"],
                                  "devices":["/dev/isgx","/dev/isgx"],"kernelModules":["a","a"]})");
    EXPECT_EQ(caps.cpuFlags, (std::set<std::string>{"sgx", "sse4_2"}));
    EXPECT_EQ(caps.devices.size(), 1u);
    EXPECT_EQ(caps.kernelModules.size(), 1u);
}

TEST(HostProbe, MalformedFixtureReportsLine)
{
    try {
        parse_fixture("{\n  \"architecture\": \"amd64\",\n  \"os\": ,\n}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(HostProbe, FixtureIsPureFunctionOfFile)
{
    auto a = probe_fixture(fixture_path("host-sgx.json"));
    auto b = probe_fixture(fixture_path("host-sgx.json"));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.fixturePath, fixture_path("host-sgx.json"));
    EXPECT_EQ(parse_fixture(capabilities_to_json(a), a.fixturePath), a);
}

TEST(HostProbe, MissingFixtureIsIoError)
{
    try {
        probe_fixture("/nonexistent/host.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
}

TEST(HasFeature, CaseInsensitiveViaNameMapping)
{
    HostCapabilities caps;
    caps.cpuFlags = {"sgx", "sse4_1"};
    EXPECT_TRUE(has_feature(caps, "SGX"));
    EXPECT_TRUE(has_feature(caps, "sse4"));
    EXPECT_FALSE(has_feature(caps, "avx"));
    EXPECT_FALSE(has_feature(HostCapabilities{}, "SGX"));
}

TEST(HasDevice, ExactAndGlob)
{
    HostCapabilities caps;
    caps.devices = {"/dev/nvidia0", "/dev/isgx"};
    EXPECT_TRUE(has_device(caps, "/dev/nvidia*"));
    EXPECT_TRUE(has_device(caps, "/dev/isgx"));
    EXPECT_FALSE(has_device(caps, "/dev/isgx2"));
    EXPECT_FALSE(has_device(caps, "/dev/sgx*"));
    // oracle: the same glob applied to every device individually
    auto g = Glob::compile("dev/nvidia*");
    bool any = false;
    for (const auto& d : caps.devices)
        any = any || g.match(d.substr(1));
    EXPECT_EQ(has_device(caps, "/dev/nvidia*"), any);
}

TEST(SgxAvailable, EitherDriverNodeSuffices)
{
    HostCapabilities caps;
    caps.cpuFlags = {"sgx"};
    EXPECT_FALSE(sgx_available(caps));
    caps.devices = {"/dev/sgx_enclave"};
    EXPECT_TRUE(sgx_available(caps));
    caps.cpuFlags.clear();
    EXPECT_FALSE(sgx_available(caps));
}

TEST(LiveProbe, ReadsFakeProcAndDev)
{
    TempDir t;
    t.write("proc/cpuinfo", "processor\t: 0\nvendor_id\t: GenuineIntel\nflags\t\t: fpu SSE4_2 sgx avx2\n\nprocessor\t: 1\nflags\t\t: fpu sse4_2 sgx avx2\n");
    t.write("proc/modules", "isgx 45056 0 - Live 0x0000000000000000\nmei_me 40960 0 - Live 0x0\n");
    t.write("dev/isgx", "");
    t.write("dev/mei0", "");
    t.write("dev/dri/card0", "");
    LiveProbeConfig cfg;
    cfg.procRoot = (t.path / "proc").string();
    cfg.devRoot  = (t.path / "dev").string();
    cfg.machine  = "x86_64";
    cfg.sysname  = "Linux";
    auto caps    = probe_live(cfg);
    EXPECT_EQ(caps.architecture, "amd64");
    EXPECT_EQ(caps.os, "linux");
    EXPECT_EQ(caps.source, HostCapabilities::Source::Live);
    EXPECT_EQ(caps.cpuFlags, (std::set<std::string>{"fpu", "sse4_2", "sgx", "avx2"}));
    EXPECT_TRUE(caps.devices.contains("/dev/isgx"));
    EXPECT_TRUE(caps.devices.contains("/dev/dri/card0"));
    EXPECT_EQ(caps.kernelModules, (std::set<std::string>{"isgx", "mei_me"}));
    EXPECT_TRUE(sgx_available(caps));
}

TEST(LiveProbe, MatchesFixtureOfSameState)
{
    TempDir t;
    t.write("proc/cpuinfo", "flags\t: sse4_2 sgx\n");
    t.write("proc/modules", "");
    t.write("dev/isgx", "");
    LiveProbeConfig cfg;
    cfg.procRoot = (t.path / "proc").string();
    cfg.devRoot  = (t.path / "dev").string();
    cfg.machine  = "x86_64";
    cfg.sysname  = "Linux";
    auto live    = probe_live(cfg);
    auto fixture = parse_fixture(capabilities_to_json(live), "snap.json");
    live.source      = fixture.source;
    live.fixturePath = fixture.fixturePath;
    EXPECT_EQ(live, fixture);
}

TEST(LiveProbe, ArmFeaturesLine)
{
    TempDir t;
    t.write("proc/cpuinfo", "processor\t: 0\nFeatures\t: fp asimd aes\n");
    LiveProbeConfig cfg;
    cfg.procRoot = (t.path / "proc").string();
    cfg.devRoot  = (t.path / "dev").string();
    cfg.machine  = "aarch64";
    cfg.sysname  = "Linux";
    auto caps    = probe_live(cfg);
    EXPECT_EQ(caps.architecture, "arm64");
    EXPECT_TRUE(caps.cpuFlags.contains("asimd"));
}

TEST(LiveProbe, UnsupportedPlatformPointsToFixture)
{
    LiveProbeConfig cfg;
    cfg.sysname = "Darwin";
    try {
        probe_live(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Unsupported);
        EXPECT_NE(std::string(e.what()).find("--fixture"), std::string::npos);
    }
}
