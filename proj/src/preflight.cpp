#include "hwdock/preflight.hpp"

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "hwdock/error.hpp"
#include "hwdock/feature_names.hpp"

namespace hwdock {

using nlohmann::json;

const char* to_string(Decision d)
{
    switch (d) {
    case Decision::Run: return "Run";
    case Decision::RunDegraded: return "RunDegraded";
    case Decision::Refuse: return "Refuse";
    }
    return "?";
}

int exit_code(Decision d)
{
    switch (d) {
    case Decision::Run: return 0;
    case Decision::RunDegraded: return 10;
    case Decision::Refuse: return 20;
    }
    return 1;
}

const char* to_string(Missing::Kind k)
{
    switch (k) {
    case Missing::Kind::Feature: return "feature";
    case Missing::Kind::Device: return "device";
    case Missing::Kind::Arch: return "arch";
    case Missing::Kind::Hardware: return "hardware";
    }
    return "?";
}

namespace {

const FeatureRule* rule_for_display_name(const KnowledgeBase& kb, const std::string& name)
{
    auto lower = lowercase(name);
    for (const auto& r : kb.rules) {
        auto display = display_name_for_rule_feature(r.feature);
        if ((display && lowercase(*display) == lower) || lowercase(r.id) == lower || lowercase(r.feature) == lower)
            return &r;
    }
    return nullptr;
}

std::optional<FeatureLevel> feature_level_ci(const AugmentedMetadata& m, const std::string& name)
{
    auto lower = lowercase(name);
    for (const auto& [f, level] : m.features)
        if (lowercase(f) == lower)
            return level;
    return std::nullopt;
}

/// Level a declared pass-through device is enforced at: that of the
/// feature it belongs to, required when it belongs to none.
FeatureLevel device_level(const AugmentedMetadata& m, const std::string& path)
{
    auto owner = owning_feature_for_device(path);
    if (!owner)
        return FeatureLevel::Required;
    if (owner->starts_with("hardware."))
        return hardware_level(m, owner->substr(9));
    return feature_level_ci(m, *owner).value_or(FeatureLevel::Required);
}

std::string simulation_advice(const std::string& feature)
{
    std::string hint = lowercase(feature) == "sgx" ? " (e.g. build/run with SGX_MODE=SIM)" : "";
    return feature + " is not available on this host: configure the application to run in simulation mode" + hint +
           "; this gives no hardware protection";
}

} // namespace

PreflightReport evaluate(const AugmentedMetadata& m, const HostCapabilities& caps, const EvaluateOptions& options)
{
    const KnowledgeBase& kb = options.kb ? *options.kb : default_kb();
    PreflightReport      r;

    auto imageArch = normalize_architecture(m.architecture);
    auto hostArch  = normalize_architecture(caps.architecture);
    if (imageArch != hostArch) {
        r.missingRequired.push_back({Missing::Kind::Arch, imageArch, "image is " + imageArch + ", host is " + hostArch});
        r.advice.push_back("no " + imageArch + " support on this " + hostArch + " host");
        std::vector<std::string> alternatives;
        for (const auto& p : options.availablePlatforms)
            if (normalize_architecture(p.substr(0, p.find('/'))) == hostArch)
                alternatives.push_back(p);
        if (!alternatives.empty())
            r.advice.push_back("pull the " + alternatives.front() + " variant of this image instead");
        else if (!options.availablePlatforms.empty()) {
            std::string list;
            for (const auto& p : options.availablePlatforms)
                list += (list.empty() ? "" : ", ") + p;
            r.advice.push_back("run on a host of one of the published platforms: " + list);
        } else {
            r.advice.push_back("run `hwdock matrix <repo>` to find tags published for " + hostArch +
                               ", or run on an " + imageArch + " host");
        }
    }
    if (lowercase(m.os) != lowercase(caps.os)) {
        r.missingRequired.push_back({Missing::Kind::Arch, m.os, "image os is " + m.os + ", host os is " + caps.os});
        r.advice.push_back("no " + m.os + " support on this " + caps.os + " host: run on a " + m.os + " host");
    }

    for (const auto& [name, level] : m.features) {
        if (has_feature(caps, name))
            continue;
        if (level == FeatureLevel::Required) {
            r.missingRequired.push_back({Missing::Kind::Feature, name, "cpu flag absent"});
            r.advice.push_back(name + " is required but absent on this host: run on a host with " + name +
                               " enabled (check firmware settings and kernel driver), or pass --force");
        } else {
            r.missingSupported.push_back({Missing::Kind::Feature, name, "cpu flag absent"});
            const auto* rule = rule_for_display_name(kb, name);
            if (rule && rule->simulatable)
                r.advice.push_back(simulation_advice(name));
            else
                r.advice.push_back(name + " is absent: the container runs without it, expect reduced functionality or "
                                          "performance; run on a host with " + name + " for full support");
        }
    }

    if (m.hardware) {
        for (const auto& [cls, vendor] : *m.hardware) {
            auto globs   = device_globs_for_hardware(cls, vendor);
            bool present = std::any_of(globs.begin(), globs.end(), [&](const auto& g) { return has_device(caps, g); });
            if (globs.empty())
                present = caps.kernelModules.contains(lowercase(vendor));
            if (present)
                continue;
            Missing miss{Missing::Kind::Hardware, cls, vendor + " " + cls + " not found"};
            if (hardware_level(m, cls) == FeatureLevel::Required) {
                r.missingRequired.push_back(miss);
                r.advice.push_back("no " + vendor + " " + cls + " found: install the " + vendor +
                                   " driver so its device nodes appear, or run on a host with one");
            } else {
                r.missingSupported.push_back(miss);
                r.advice.push_back("no " + vendor + " " + cls + " found: the container falls back to running without it");
            }
        }
    }

    std::vector<std::string> present;
    for (const auto& dev : m.passthru_or_empty()) {
        if (has_device(caps, dev)) {
            present.push_back("--device=" + dev);
            continue;
        }
        Missing miss{Missing::Kind::Device, dev, "device node absent"};
        if (device_level(m, dev) == FeatureLevel::Required) {
            r.missingRequired.push_back(miss);
            r.advice.push_back("device " + dev + " is not present: load its kernel driver or run on a host that provides it");
        } else {
            r.missingSupported.push_back(miss);
            r.advice.push_back("device " + dev + " is not present and will not be passed through; load its driver for "
                               "full functionality");
        }
    }
    for (const auto& v : m.volumes_or_empty()) {
        r.volumeArgs.push_back("-v");
        r.volumeArgs.push_back(v + ":" + v);
    }

    if (!r.missingRequired.empty()) {
        r.decision             = Decision::Refuse;
        r.withheldPassthruArgs = std::move(present);
    } else {
        r.decision     = r.missingSupported.empty() ? Decision::Run : Decision::RunDegraded;
        r.passthruArgs = std::move(present);
    }
    return r;
}

namespace {

struct UserMappings {
    std::set<std::string> deviceHost;
    std::set<std::string> deviceContainer;
    std::set<std::string> volumeHost;
    std::set<std::string> volumeContainer;
};

void note_device(UserMappings& u, const std::string& spec)
{
    auto a = spec.find(':');
    u.deviceHost.insert(spec.substr(0, a));
    if (a != std::string::npos) {
        auto rest = spec.substr(a + 1);
        u.deviceContainer.insert(rest.substr(0, rest.find(':')));
    } else {
        u.deviceContainer.insert(spec);
    }
}

void note_volume(UserMappings& u, const std::string& spec)
{
    auto a = spec.find(':');
    if (a == std::string::npos) {
        u.volumeContainer.insert(spec); // anonymous volume
        return;
    }
    u.volumeHost.insert(spec.substr(0, a));
    auto rest = spec.substr(a + 1);
    u.volumeContainer.insert(rest.substr(0, rest.find(':')));
}

UserMappings scan_user_args(const std::vector<std::string>& args)
{
    UserMappings u;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const auto& a    = args[i];
        auto        next = [&]() -> std::string { return i + 1 < args.size() ? args[++i] : std::string{}; };
        if (a == "--device")
            note_device(u, next());
        else if (a.starts_with("--device="))
            note_device(u, a.substr(9));
        else if (a == "-v" || a == "--volume")
            note_volume(u, next());
        else if (a.starts_with("--volume="))
            note_volume(u, a.substr(9));
        else if (a.starts_with("-v=") )
            note_volume(u, a.substr(3));
        else if (a.starts_with("-v") && a.size() > 2 && a[2] == '/')
            note_volume(u, a.substr(2));
    }
    return u;
}

} // namespace

RunArgs synthesize_run_args(const PreflightReport& report, const std::vector<std::string>& userArgs,
                            const std::string& image, bool force, const std::string& engineCommand)
{
    RunArgs out;
    auto    devices = report.passthruArgs;
    if (report.decision == Decision::Refuse) {
        if (!force)
            throw Error(ErrorKind::Refused, "preflight refused; use --force to override");
        std::string what;
        for (const auto& m : report.missingRequired)
            what += (what.empty() ? "" : ", ") + m.name;
        out.warnings.push_back("WARNING: preflight refused (missing: " + what +
                               "); continuing because of --force, the container is likely to fail");
        devices = report.withheldPassthruArgs;
    }

    auto user = scan_user_args(userArgs);
    out.args.push_back(engineCommand);
    std::set<std::string> emitted;
    for (const auto& d : devices) {
        auto path = d.substr(std::string_view("--device=").size());
        if (user.deviceHost.contains(path) || user.deviceContainer.contains(path) || !emitted.insert(d).second)
            continue;
        out.args.push_back(d);
    }
    for (std::size_t i = 0; i + 1 < report.volumeArgs.size(); i += 2) {
        const auto& spec = report.volumeArgs[i + 1];
        auto        host = spec.substr(0, spec.find(':'));
        auto        ctr  = spec.substr(spec.find(':') + 1);
        if (user.volumeHost.contains(host) || user.volumeContainer.contains(ctr) || !emitted.insert(spec).second)
            continue;
        out.args.push_back("-v");
        out.args.push_back(spec);
    }
    out.args.insert(out.args.end(), userArgs.begin(), userArgs.end());
    out.args.push_back(image);
    return out;
}

ArchCell ArchMatrix::cell(const std::string& tag, const std::string& arch) const
{
    ArchCell c;
    auto     row = cells.find(tag);
    if (row == cells.end())
        return c;
    auto it = row->second.find(arch);
    if (it == row->second.end())
        return c;
    c.available = true;
    c.digest    = it->second;
    return c;
}

std::size_t ArchMatrix::cell_count() const
{
    std::size_t n = 0;
    for (const auto& [tag, row] : cells)
        n += row.size();
    return n;
}

namespace {

std::string column_name(const std::string& arch, const std::string& os, const std::string& variant)
{
    std::string c = os.empty() || os == "linux" ? arch : os + "/" + arch;
    if (!variant.empty())
        c += "/" + variant;
    return c;
}

} // namespace

ArchMatrix arch_matrix(const ImageRef& repo, RegistryClient& client, const std::optional<std::string>& resumeFrom)
{
    ArchMatrix out;
    out.repository = repo.registry + "/" + repo.repository;

    std::vector<std::string> tags;
    try {
        tags = client.list_tags(repo);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::BudgetExhausted)
            throw;
        out.incomplete  = true;
        out.resumeToken = resumeFrom.value_or("");
        out.notes.push_back(std::string("tag listing interrupted: ") + e.what());
        return out;
    }
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    if (tags.empty()) {
        out.emptyTagList = true;
        out.notes.push_back("repository lists no tags");
        return out;
    }

    std::set<std::string> archs;
    auto                  start = tags.begin();
    if (resumeFrom && !resumeFrom->empty())
        start = std::lower_bound(tags.begin(), tags.end(), *resumeFrom);

    for (auto it = start; it != tags.end(); ++it) {
        const auto& tag = *it;
        try {
            auto res = client.fetch_manifest(repo, tag);
            auto& row = out.cells[tag];
            if (res.doc.kind == ManifestKind::MultiPlatformIndex) {
                for (const auto& e : res.doc.platformEntries) {
                    if (e.architecture == "unknown")
                        continue; // attestation manifests
                    auto col = column_name(e.architecture, e.os, e.variant);
                    row[col] = e.manifestDigest;
                    archs.insert(col);
                }
            } else {
                std::string arch = "unknown", os, variant;
                if (res.doc.configDigest) {
                    auto config = client.fetch_blob(repo, *res.doc.configDigest);
                    try {
                        auto c  = json::parse(config.begin(), config.end());
                        arch    = c.value("architecture", arch);
                        os      = c.value("os", os);
                        variant = c.value("variant", variant);
                    } catch (const json::exception&) {
                        out.notes.push_back("tag " + tag + ": unreadable image config");
                    }
                }
                auto col = column_name(arch, os, variant);
                row[col] = res.digest;
                archs.insert(col);
            }
            out.tags.push_back(tag);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::BudgetExhausted) {
                out.cells.erase(tag);
                out.incomplete  = true;
                out.resumeToken = tag;
                out.notes.push_back(std::string("stopped at tag ") + tag + ": " + e.what());
                break;
            }
            if (e.kind() == ErrorKind::NotFound) {
                out.notes.push_back("tag " + tag + " listed but its manifest is absent");
                continue;
            }
            throw;
        }
    }
    out.architectures.assign(archs.begin(), archs.end());
    return out;
}

namespace {

json missing_json(const std::vector<Missing>& list)
{
    json a = json::array();
    for (const auto& m : list)
        a.push_back({{"kind", to_string(m.kind)}, {"name", m.name}, {"detail", m.detail}});
    return a;
}

} // namespace

std::string preflight_report_to_json(const PreflightReport& r, int indent)
{
    json j{{"decision", to_string(r.decision)},
           {"missingRequired", missing_json(r.missingRequired)},
           {"missingSupported", missing_json(r.missingSupported)},
           {"passthruArgs", r.passthruArgs},
           {"volumeArgs", r.volumeArgs},
           {"advice", r.advice}};
    if (!r.withheldPassthruArgs.empty())
        j["withheldPassthruArgs"] = r.withheldPassthruArgs;
    return j.dump(indent);
}

std::string render_preflight_text(const PreflightReport& r)
{
    std::ostringstream out;
    out << "Decision: " << to_string(r.decision) << "\n";
    auto list = [&](const char* title, const std::vector<Missing>& items) {
        if (items.empty())
            return;
        out << title << ":\n";
        for (const auto& m : items)
            out << "  - " << to_string(m.kind) << " " << m.name << " (" << m.detail << ")\n";
    };
    list("Missing (required)", r.missingRequired);
    list("Missing (supported)", r.missingSupported);
    if (!r.passthruArgs.empty() || !r.volumeArgs.empty()) {
        out << "Pass-through:";
        for (const auto& a : r.passthruArgs)
            out << " " << a;
        for (const auto& a : r.volumeArgs)
            out << " " << a;
        out << "\n";
    }
    for (const auto& a : r.advice)
        out << "advice: " << a << "\n";
    return out.str();
}

std::string arch_matrix_to_json(const ArchMatrix& m, int indent)
{
    json cells = json::object();
    for (const auto& tag : m.tags) {
        json row = json::object();
        for (const auto& arch : m.architectures) {
            auto c    = m.cell(tag, arch);
            row[arch] = c.available ? json{{"available", true}, {"digest", *c.digest}} : json{{"available", false}};
        }
        cells[tag] = row;
    }
    json j{{"repository", m.repository},
           {"tags", m.tags},
           {"architectures", m.architectures},
           {"cells", cells},
           {"incomplete", m.incomplete},
           {"emptyTagList", m.emptyTagList},
           {"notes", m.notes}};
    j["resumeToken"] = m.resumeToken ? json(*m.resumeToken) : json(nullptr);
    return j.dump(indent);
}

std::string render_arch_matrix_text(const ArchMatrix& m)
{
    std::ostringstream out;
    out << m.repository << ": " << m.tags.size() << " tags x " << m.architectures.size() << " architectures\n";
    std::size_t w = 3;
    for (const auto& t : m.tags)
        w = std::max(w, t.size());
    out << std::string(w, ' ');
    for (const auto& a : m.architectures)
        out << "  " << a;
    out << "\n";
    for (const auto& t : m.tags) {
        out << t << std::string(w - t.size(), ' ');
        for (const auto& a : m.architectures)
            out << "  " << (m.cell(t, a).available ? "x" : "-") << std::string(a.size() - 1, ' ');
        out << "\n";
    }
    out << "architectures per tag:\n";
    for (const auto& t : m.tags) {
        out << "  " << t << ":";
        for (const auto& a : m.architectures)
            if (m.cell(t, a).available)
                out << " " << a;
        out << "\n";
    }
    out << "tags per architecture:\n";
    for (const auto& a : m.architectures) {
        std::size_t n = 0;
        for (const auto& t : m.tags)
            n += m.cell(t, a).available;
        out << "  " << a << ": " << n << "\n";
    }
    if (m.emptyTagList)
        out << "warning: repository lists no tags\n";
    if (m.incomplete)
        out << "warning: incomplete (rate budget); resume with --resume " << m.resumeToken.value_or("") << "\n";
    for (const auto& n : m.notes)
        out << "note: " << n << "\n";
    return out.str();
}

bool StdTerminal::is_tty()
{
    return ::isatty(STDIN_FILENO) && ::isatty(STDERR_FILENO);
}

void StdTerminal::write(const std::string& text)
{
    std::cerr << text << std::flush;
}

std::optional<std::string> StdTerminal::read_line()
{
    std::string line;
    if (!std::getline(std::cin, line))
        return std::nullopt;
    return line;
}

bool approve_interactively(const PreflightReport& report, Terminal& tty, bool assumeYes)
{
    if (assumeYes)
        return true;
    const auto& devices = report.decision == Decision::Refuse ? report.withheldPassthruArgs : report.passthruArgs;
    if (devices.empty() && report.volumeArgs.empty())
        return true; // nothing beyond a plain run to approve
    if (!tty.is_tty())
        throw Error(ErrorKind::Usage, "no interactive terminal to confirm device/volume access; pass --yes to approve");

    std::ostringstream msg;
    msg << "The container requests access to:\n";
    for (const auto& d : devices)
        msg << "  device  " << d.substr(std::string_view("--device=").size()) << "\n";
    for (std::size_t i = 1; i < report.volumeArgs.size(); i += 2)
        msg << "  volume  " << report.volumeArgs[i] << "\n";
    msg << "Allow? [y/N] ";
    tty.write(msg.str());
    auto answer = tty.read_line();
    if (!answer)
        return false;
    auto a = lowercase(*answer);
    a.erase(0, a.find_first_not_of(" \t"));
    a.erase(a.find_last_not_of(" \t\r") + 1);
    return a == "y" || a == "yes";
}

} // namespace hwdock
