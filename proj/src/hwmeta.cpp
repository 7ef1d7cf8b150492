#include "hwdock/hwmeta.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "hwdock/error.hpp"
#include "hwdock/feature_names.hpp"

namespace hwdock {

using nlohmann::json;

const char* to_string(FeatureLevel l)
{
    return l == FeatureLevel::Required ? "required" : "supported";
}

std::optional<FeatureLevel> feature_level_from_string(std::string_view s)
{
    if (s == "required")
        return FeatureLevel::Required;
    if (s == "supported")
        return FeatureLevel::Supported;
    return std::nullopt;
}

const std::vector<std::string>& AugmentedMetadata::passthru_or_empty() const
{
    static const std::vector<std::string> empty;
    return passthruDevices ? *passthruDevices : empty;
}

const std::vector<std::string>& AugmentedMetadata::volumes_or_empty() const
{
    static const std::vector<std::string> empty;
    return volumes ? *volumes : empty;
}

void validate(const AugmentedMetadata& m)
{
    if (m.architecture.empty())
        throw Error(ErrorKind::Schema, "architecture missing");
    if (m.os.empty())
        throw Error(ErrorKind::Schema, "os missing");
    std::set<std::string> folded;
    for (const auto& [name, _] : m.features) {
        if (name.empty())
            throw Error(ErrorKind::Schema, "empty feature name");
        if (!folded.insert(lowercase(name)).second)
            throw Error(ErrorKind::Schema, "feature \"" + name + "\" is listed twice (names are case-insensitive)");
    }
    if (m.hardware)
        for (const auto& [cls, vendor] : *m.hardware)
            if (cls.empty() || vendor.empty())
                throw Error(ErrorKind::Schema, "hardware entries need a class and a vendor");
    for (const auto& p : m.passthru_or_empty())
        if (!p.starts_with("/dev/") || p.size() <= 5)
            throw Error(ErrorKind::Schema, "passthru device \"" + p + "\" is not an absolute /dev/ path");
    for (const auto& v : m.volumes_or_empty())
        if (!v.starts_with("/"))
            throw Error(ErrorKind::Schema, "volume \"" + v + "\" is not an absolute path");
}

namespace {

const std::set<std::string> kTopKeys      = {"platform", "passthru-devices", "volumes", "annotations"};
const std::set<std::string> kPlatformKeys = {"cpu", "hardware", "os"};
const std::set<std::string> kCpuKeys      = {"architecture", "features"};

std::map<std::string, std::string> extras(const json& obj, const std::set<std::string>& known)
{
    std::map<std::string, std::string> out;
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.contains(it.key()))
            out[it.key()] = it->dump();
    return out;
}

void put_extras(json& obj, const std::map<std::string, std::string>& extra)
{
    for (const auto& [k, v] : extra)
        obj[k] = json::parse(v);
}

std::vector<std::string> string_list(const json& j, const char* key)
{
    if (!j.is_array())
        throw Error(ErrorKind::Schema, std::string(key) + " must be an array");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string())
            throw Error(ErrorKind::Schema, std::string(key) + " entries must be strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

json parse_json(std::string_view text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
    }
}

} // namespace

AugmentedMetadata parse_augmented(std::string_view text)
{
    json root = parse_json(text);
    if (!root.is_object())
        throw Error(ErrorKind::Schema, "metadata must be a JSON object");

    AugmentedMetadata m;
    auto              platform = root.find("platform");
    if (platform == root.end() || !platform->is_object())
        throw Error(ErrorKind::Schema, "platform missing");
    auto cpu = platform->find("cpu");
    if (cpu == platform->end() || !cpu->is_object())
        throw Error(ErrorKind::Schema, "architecture missing");
    if (auto a = cpu->find("architecture"); a != cpu->end() && a->is_string())
        m.architecture = a->get<std::string>();
    if (m.architecture.empty())
        throw Error(ErrorKind::Schema, "architecture missing");
    if (auto o = platform->find("os"); o != platform->end() && o->is_string())
        m.os = o->get<std::string>();
    if (m.os.empty())
        throw Error(ErrorKind::Schema, "os missing");

    auto features        = cpu->find("features");
    m.featuresKeyPresent = features != cpu->end();
    if (m.featuresKeyPresent) {
        if (!features->is_object())
            throw Error(ErrorKind::Schema, "cpu.features must be an object of name -> level");
        for (auto it = features->begin(); it != features->end(); ++it) {
            auto level = it->is_string() ? feature_level_from_string(it->get<std::string>()) : std::nullopt;
            if (!level)
                throw Error(ErrorKind::Schema, "feature \"" + it.key() + "\" has level " + it->dump() +
                                                   "; expected \"supported\" or \"required\"");
            m.features[it.key()] = *level;
        }
    }
    if (auto hw = platform->find("hardware"); hw != platform->end()) {
        if (!hw->is_object())
            throw Error(ErrorKind::Schema, "hardware must be an object of class -> vendor");
        m.hardware.emplace();
        for (auto it = hw->begin(); it != hw->end(); ++it) {
            if (!it->is_string())
                throw Error(ErrorKind::Schema, "hardware \"" + it.key() + "\" must be a string");
            (*m.hardware)[it.key()] = it->get<std::string>();
        }
    }
    if (auto p = root.find("passthru-devices"); p != root.end())
        m.passthruDevices = string_list(*p, "passthru-devices");
    if (auto v = root.find("volumes"); v != root.end())
        m.volumes = string_list(*v, "volumes");
    if (auto a = root.find("annotations"); a != root.end()) {
        if (!a->is_object())
            throw Error(ErrorKind::Schema, "annotations must be an object");
        for (auto it = a->begin(); it != a->end(); ++it) {
            if (!it->is_string())
                throw Error(ErrorKind::Schema, "annotation \"" + it.key() + "\" must be a string");
            m.annotations[it.key()] = it->get<std::string>();
        }
    }
    m.extraTop      = extras(root, kTopKeys);
    m.extraPlatform = extras(*platform, kPlatformKeys);
    m.extraCpu      = extras(*cpu, kCpuKeys);
    validate(m);
    return m;
}

std::string serialize_augmented(const AugmentedMetadata& m, int indent)
{
    validate(m);
    json cpu{{"architecture", m.architecture}};
    if (m.featuresKeyPresent || !m.features.empty()) {
        cpu["features"] = json::object();
        for (const auto& [name, level] : m.features)
            cpu["features"][name] = to_string(level);
    }
    put_extras(cpu, m.extraCpu);

    json platform{{"cpu", std::move(cpu)}, {"os", m.os}};
    if (m.hardware) {
        platform["hardware"] = json::object();
        for (const auto& [cls, vendor] : *m.hardware)
            platform["hardware"][cls] = vendor;
    }
    put_extras(platform, m.extraPlatform);

    json root{{"platform", std::move(platform)}};
    if (m.passthruDevices)
        root["passthru-devices"] = *m.passthruDevices;
    if (m.volumes)
        root["volumes"] = *m.volumes;
    if (!m.annotations.empty())
        root["annotations"] = m.annotations;
    put_extras(root, m.extraTop);
    return root.dump(indent);
}

LegacyPlatform parse_legacy(std::string_view text)
{
    json root = parse_json(text);
    // accept either {"platform": {...}} or the bare platform object
    const json& p = root.is_object() && root.contains("platform") ? root["platform"] : root;
    if (!p.is_object())
        throw Error(ErrorKind::Schema, "platform missing");
    LegacyPlatform out;
    if (auto a = p.find("architecture"); a != p.end() && a->is_string())
        out.architecture = a->get<std::string>();
    if (out.architecture.empty())
        throw Error(ErrorKind::Schema, "architecture missing");
    if (auto o = p.find("os"); o != p.end() && o->is_string())
        out.os = o->get<std::string>();
    if (out.os.empty())
        throw Error(ErrorKind::Schema, "os missing");
    if (auto f = p.find("features"); f != p.end())
        out.features = string_list(*f, "features");
    return out;
}

std::string serialize_legacy_platform(const LegacyPlatform& p)
{
    return json{{"architecture", p.architecture}, {"os", p.os}, {"features", p.features}}.dump();
}

std::string serialize_legacy(const LegacyPlatform& p, int indent)
{
    json root{{"platform", {{"architecture", p.architecture}, {"os", p.os}, {"features", p.features}}}};
    return root.dump(indent);
}

LevelPolicy LevelPolicy::defaults()
{
    using T = FeatureMapping::Target;
    return LevelPolicy{{
        {"tee.*", T::CpuFeature, "SGX", "", FeatureLevel::Supported},
        {"gpu.nvidia", T::Hardware, "GPU", "nVidia", FeatureLevel::Required},
        {"device.*", T::DevicesOnly, "", "", FeatureLevel::Required},
    }};
}

namespace {
bool mapping_matches(const FeatureMapping& m, std::string_view feature)
{
    if (m.match.ends_with('*'))
        return feature.starts_with(std::string_view(m.match).substr(0, m.match.size() - 1));
    return feature == m.match;
}

std::string describe(const FeatureMapping& m)
{
    std::string target = m.target == FeatureMapping::Target::CpuFeature ? "cpu feature " + m.name
                         : m.target == FeatureMapping::Target::Hardware ? "hardware " + m.name + ":" + m.vendor
                                                                        : std::string("devices only");
    return "'" + m.match + "' -> " + target + " (" + to_string(m.confirmedLevel) + ")";
}
} // namespace

const FeatureMapping* LevelPolicy::resolve(std::string_view ruleFeature) const
{
    const FeatureMapping* found = nullptr;
    for (const auto& m : mappings) {
        if (!mapping_matches(m, ruleFeature))
            continue;
        if (found != nullptr) {
            bool same = found->target == m.target && found->name == m.name && found->vendor == m.vendor &&
                        found->confirmedLevel == m.confirmedLevel;
            if (!same)
                throw Error(ErrorKind::Validation, "conflicting policy mappings for " + std::string(ruleFeature) +
                                                       ": " + describe(*found) + " vs " + describe(m));
            continue;
        }
        found = &m;
    }
    return found;
}

AugmentedMetadata emit_augmented(const ScanReport& scan, const LegacyPlatform& base, const LevelPolicy& policy)
{
    AugmentedMetadata m;
    m.architecture = base.architecture;
    m.os           = base.os;
    m.hardware.emplace();
    m.passthruDevices.emplace();
    m.volumes.emplace();
    for (const auto& f : base.features)
        m.features[f] = FeatureLevel::Required;

    std::set<std::string> devices;
    for (const auto& d : scan.detections) {
        if (d.verdict == Verdict::Absent)
            continue;
        const FeatureMapping* map = policy.resolve(d.feature);
        bool confirmed            = d.verdict == Verdict::Confirmed;
        std::string strength      = std::to_string(d.matchedPatterns.size()) + " of " + std::to_string(d.minMatches) +
                               " patterns matched";
        if (map == nullptr) {
            m.annotations["unmapped:" + d.feature] = std::string(to_string(d.verdict)) + ", " + strength;
            continue;
        }
        if (!confirmed)
            m.annotations["suspected:" + d.feature] = strength;

        switch (map->target) {
        case FeatureMapping::Target::CpuFeature: {
            auto level = confirmed ? map->confirmedLevel : FeatureLevel::Supported;
            auto it    = m.features.find(map->name);
            if (it == m.features.end())
                m.features[map->name] = level;
            else if (level == FeatureLevel::Required)
                it->second = FeatureLevel::Required;
            break;
        }
        case FeatureMapping::Target::Hardware: {
            (*m.hardware)[map->name] = map->vendor;
            auto level               = confirmed ? map->confirmedLevel : FeatureLevel::Supported;
            if (level == FeatureLevel::Supported)
                m.annotations["level:hardware." + map->name] = "supported";
            break;
        }
        case FeatureMapping::Target::DevicesOnly: break;
        }

        if (confirmed)
            for (const auto& e : d.evidence)
                if (e.path.starts_with("dev/"))
                    devices.insert("/" + e.path);
    }
    m.passthruDevices->assign(devices.begin(), devices.end());
    validate(m);
    return m;
}

FeatureLevel hardware_level(const AugmentedMetadata& m, const std::string& deviceClass)
{
    auto it = m.annotations.find("level:hardware." + deviceClass);
    if (it != m.annotations.end() && it->second == "supported")
        return FeatureLevel::Supported;
    return FeatureLevel::Required;
}

Downgrade downgrade(const AugmentedMetadata& m)
{
    Downgrade out;
    out.platform.architecture = m.architecture;
    out.platform.os           = m.os;
    for (const auto& [name, level] : m.features) {
        if (level == FeatureLevel::Required)
            out.platform.features.push_back(name);
        else
            out.loss.droppedFeatures.push_back(name);
    }
    std::sort(out.platform.features.begin(), out.platform.features.end());
    if (m.hardware)
        for (const auto& [cls, vendor] : *m.hardware)
            out.loss.droppedHardware.push_back(cls + ":" + vendor);
    out.loss.droppedPassthru = m.passthru_or_empty();
    out.loss.droppedVolumes  = m.volumes_or_empty();
    return out;
}

} // namespace hwdock
