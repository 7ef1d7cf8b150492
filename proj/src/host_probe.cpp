#include "hwdock/host_probe.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hwdock/error.hpp"
#include "hwdock/feature_names.hpp"
#include "hwdock/glob.hpp"

namespace hwdock {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::set<std::string> read_cpu_flags(const std::string& cpuinfo)
{
    std::ifstream in(cpuinfo);
    if (!in)
        throw Error(ErrorKind::Unsupported, "cannot read " + cpuinfo + "; use --fixture");
    std::set<std::string> flags;
    std::string           line;
    while (std::getline(in, line)) {
        auto colon = line.find(':');
        if (colon == std::string::npos)
            continue;
        auto key = trim(std::string_view(line).substr(0, colon));
        // x86 uses "flags", arm "Features"
        if (key != "flags" && key != "Features")
            continue;
        std::istringstream words(line.substr(colon + 1));
        std::string        w;
        while (words >> w)
            flags.insert(lowercase(w));
        break;
    }
    return flags;
}

void walk_dev(const fs::path& root, const fs::path& dir, int depth, std::set<std::string>& out)
{
    std::error_code ec;
    for (fs::directory_iterator it(dir, fs::directory_options::skip_permission_denied, ec), end; !ec && it != end;
         it.increment(ec)) {
        auto rel = fs::relative(it->path(), root, ec);
        if (ec)
            continue;
        out.insert("/dev/" + rel.generic_string());
        if (depth > 1 && it->is_directory(ec) && !it->is_symlink(ec))
            walk_dev(root, it->path(), depth - 1, out);
    }
}

std::size_t line_of(std::string_view text, std::size_t byte)
{
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

} // namespace

HostCapabilities probe_live(const LiveProbeConfig& config)
{
    struct utsname uts {};
    uname(&uts);
    std::string sysname = config.sysname.value_or(uts.sysname);
    if (lowercase(sysname) != "linux")
        throw Error(ErrorKind::Unsupported,
                    "live probing is only supported on Linux (this host is " + sysname + "); use --fixture <snapshot>");

    HostCapabilities caps;
    caps.source       = HostCapabilities::Source::Live;
    caps.os           = "linux";
    caps.architecture = normalize_architecture(config.machine.value_or(uts.machine));
    caps.cpuFlags     = read_cpu_flags(config.procRoot + "/cpuinfo");

    std::error_code ec;
    if (fs::is_directory(config.devRoot, ec))
        walk_dev(fs::path(config.devRoot), fs::path(config.devRoot), config.devDepth, caps.devices);

    std::ifstream modules(config.procRoot + "/modules");
    std::string   line;
    while (std::getline(modules, line)) {
        auto name = line.substr(0, line.find(' '));
        if (!name.empty())
            caps.kernelModules.insert(name);
    }
    return caps;
}

HostCapabilities parse_fixture(std::string_view text, const std::string& sourcePath)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, "malformed host fixture " + sourcePath + " at line " +
                                          std::to_string(line_of(text, e.byte)) + ": " + e.what());
    }
    if (!root.is_object())
        throw Error(ErrorKind::Parse, "host fixture " + sourcePath + " must be a JSON object");

    auto str = [&](const char* key) {
        auto it = root.find(key);
        if (it == root.end() || !it->is_string())
            throw Error(ErrorKind::Parse, "host fixture " + sourcePath + ": " + key + " missing");
        return it->get<std::string>();
    };
    auto list = [&](const char* key) {
        std::set<std::string> out;
        auto                  it = root.find(key);
        if (it == root.end())
            return out;
        if (!it->is_array())
            throw Error(ErrorKind::Parse, "host fixture " + sourcePath + ": " + key + " must be an array");
        for (const auto& v : *it) {
            if (!v.is_string())
                throw Error(ErrorKind::Parse, "host fixture " + sourcePath + ": " + key + " entries must be strings");
            out.insert(v.get<std::string>());
        }
        return out;
    };

    HostCapabilities caps;
    caps.source       = HostCapabilities::Source::Fixture;
    caps.fixturePath  = sourcePath;
    caps.architecture = str("architecture");
    caps.os           = str("os");
    for (const auto& f : list("cpuFlags"))
        caps.cpuFlags.insert(lowercase(f));
    caps.devices       = list("devices");
    caps.kernelModules = list("kernelModules");
    for (const auto& d : caps.devices)
        if (!d.starts_with("/dev/"))
            throw Error(ErrorKind::Parse, "host fixture " + sourcePath + ": device \"" + d + "\" is not under /dev/");
    return caps;
}

HostCapabilities probe_fixture(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot read host fixture " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_fixture(ss.str(), path);
}

bool has_feature(const HostCapabilities& caps, std::string_view featureName)
{
    for (const auto& flag : host_flags_for_feature(featureName))
        if (caps.cpuFlags.contains(flag))
            return true;
    return false;
}

bool has_device(const HostCapabilities& caps, std::string_view query)
{
    if (query.find_first_of("*?[") == std::string_view::npos)
        return caps.devices.contains(std::string(query));
    std::string pattern(query);
    return std::any_of(caps.devices.begin(), caps.devices.end(),
                       [&](const std::string& d) { return wildcard_match(pattern, d); });
}

bool sgx_available(const HostCapabilities& caps)
{
    return has_feature(caps, "SGX") && (has_device(caps, "/dev/isgx") || has_device(caps, "/dev/sgx_enclave"));
}

std::string capabilities_to_json(const HostCapabilities& caps, int indent)
{
    json j{{"architecture", caps.architecture},
           {"os", caps.os},
           {"cpuFlags", caps.cpuFlags},
           {"devices", caps.devices},
           {"kernelModules", caps.kernelModules},
           {"source", caps.source == HostCapabilities::Source::Live ? "live" : "fixture"}};
    if (caps.source == HostCapabilities::Source::Fixture)
        j["fixturePath"] = caps.fixturePath;
    return j.dump(indent);
}

std::string render_capabilities_text(const HostCapabilities& caps)
{
    std::ostringstream out;
    out << "Source:       "
        << (caps.source == HostCapabilities::Source::Live ? std::string("live") : "fixture " + caps.fixturePath) << "\n";
    out << "Architecture: " << caps.architecture << "\n";
    out << "OS:           " << caps.os << "\n";
    out << "SGX:          " << (sgx_available(caps) ? "available" : has_feature(caps, "SGX") ? "cpu flag only" : "absent")
        << "\n";
    out << "Nvidia GPU:   " << (has_device(caps, "/dev/nvidia[0-9]*") ? "device present" : "absent") << "\n";
    out << "CPU flags (" << caps.cpuFlags.size() << "):";
    for (const auto& f : caps.cpuFlags)
        out << " " << f;
    out << "\nDevices (" << caps.devices.size() << "):\n";
    for (const auto& d : caps.devices)
        out << "  " << d << "\n";
    out << "Kernel modules: " << caps.kernelModules.size() << "\n";
    return out.str();
}

} // namespace hwdock
