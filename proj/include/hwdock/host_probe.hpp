#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace hwdock {

struct HostCapabilities {
    enum class Source { Live, Fixture };

    std::string           architecture;
    std::string           os;
    std::set<std::string> cpuFlags; // lowercase
    std::set<std::string> devices;  // absolute /dev paths
    std::set<std::string> kernelModules;
    Source                source = Source::Live;
    std::string           fixturePath;

    bool operator==(const HostCapabilities&) const = default;
};

/// Where live probing looks; tests point these at a fake tree.
struct LiveProbeConfig {
    std::string                procRoot = "/proc";
    std::string                devRoot  = "/dev";
    std::optional<std::string> machine; // default: uname().machine
    std::optional<std::string> sysname; // default: uname().sysname
    int                        devDepth = 4;
};

/// Reads the CPU flag line of <procRoot>/cpuinfo, enumerates devRoot and
/// <procRoot>/modules. Throws Error(Unsupported) off Linux.
HostCapabilities probe_live(const LiveProbeConfig& config = {});

/// JSON snapshot {architecture, os, cpuFlags, devices, kernelModules}.
HostCapabilities probe_fixture(const std::string& path);
HostCapabilities parse_fixture(std::string_view text, const std::string& sourcePath = "<memory>");

/// Case-insensitive, through the metadata feature name mapping.
bool has_feature(const HostCapabilities& caps, std::string_view featureName);
/// Exact path, or a glob such as "/dev/nvidia*".
bool has_device(const HostCapabilities& caps, std::string_view pathOrGlob);

/// sgx flag plus either driver node (/dev/isgx or /dev/sgx_enclave).
bool sgx_available(const HostCapabilities& caps);

std::string capabilities_to_json(const HostCapabilities& caps, int indent = 2);
std::string render_capabilities_text(const HostCapabilities& caps);

} // namespace hwdock
