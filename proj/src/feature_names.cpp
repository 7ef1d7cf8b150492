#include "hwdock/feature_names.hpp"

#include <algorithm>
#include <cctype>

#include "hwdock/glob.hpp"

namespace hwdock {

std::string lowercase(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<std::string> host_flags_for_feature(std::string_view featureName)
{
    auto name = lowercase(featureName);
    if (name == "sse4")
        return {"sse4_1", "sse4_2"};
    if (name == "sse4.1")
        return {"sse4_1"};
    if (name == "sse4.2")
        return {"sse4_2"};
    if (name == "sgx")
        return {"sgx"};
    if (name == "sev")
        return {"sev"};
    if (name == "avx-512" || name == "avx512")
        return {"avx512f"};
    return {name};
}

std::optional<std::string> display_name_for_rule_feature(std::string_view ruleFeature)
{
    if (ruleFeature == "tee.sgx")
        return "SGX";
    if (ruleFeature == "tee.sev")
        return "SEV";
    if (ruleFeature == "gpu.nvidia")
        return "GPU";
    return std::nullopt;
}

std::optional<std::string> owning_feature_for_device(std::string_view devicePath)
{
    if (devicePath == "/dev/isgx" || devicePath == "/dev/sgx_enclave" || devicePath == "/dev/sgx_provision" ||
        devicePath == "/dev/mei0" || devicePath.starts_with("/dev/sgx/"))
        return "SGX";
    if (wildcard_match("/dev/nvidia*", devicePath) || devicePath.starts_with("/dev/nvidia-caps/"))
        return "hardware.GPU";
    return std::nullopt;
}

std::vector<std::string> device_globs_for_hardware(std::string_view deviceClass, std::string_view vendor)
{
    auto cls = lowercase(deviceClass);
    auto ven = lowercase(vendor);
    if (cls == "gpu" && ven == "nvidia")
        return {"/dev/nvidia[0-9]*"};
    if (cls == "gpu" && (ven == "amd" || ven == "radeon"))
        return {"/dev/kfd"};
    if (cls == "fpga")
        return {"/dev/xclmgmt*", "/dev/dri/renderD*"};
    return {};
}

std::string normalize_architecture(std::string_view arch)
{
    auto a = lowercase(arch);
    if (a == "x86_64" || a == "x86-64" || a == "amd64")
        return "amd64";
    if (a == "aarch64" || a == "arm64" || a == "armv8l")
        return "arm64";
    if (a.starts_with("armv7") || a.starts_with("armv6") || a == "arm")
        return "arm";
    if (a == "i386" || a == "i686" || a == "i586" || a == "x86" || a == "386")
        return "386";
    if (a == "ppc64le" || a == "powerpc64le")
        return "ppc64le";
    return a;
}

} // namespace hwdock
