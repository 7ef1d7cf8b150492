#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scanner.hpp"

namespace hwdock {

enum class FeatureLevel { Supported, Required };

const char*                 to_string(FeatureLevel l);
std::optional<FeatureLevel> feature_level_from_string(std::string_view s);

/// The extended platform record:
///
///   {"platform": {"cpu": {"architecture", "features": {name: level}},
///                 "hardware": {class: vendor}, "os"},
///    "passthru-devices": [...], "volumes": [...]}
///
/// Keys this type does not model are kept verbatim (as JSON text) per
/// object level and re-emitted on serialization.
struct AugmentedMetadata {
    std::string                                       architecture;
    std::string                                       os;
    std::map<std::string, FeatureLevel>               features;
    std::optional<std::map<std::string, std::string>> hardware;
    std::optional<std::vector<std::string>>           passthruDevices;
    std::optional<std::vector<std::string>>           volumes;
    /// Emitted as a top-level "annotations" object when non-empty.
    std::map<std::string, std::string> annotations;

    bool                               featuresKeyPresent = true;
    std::map<std::string, std::string> extraTop;
    std::map<std::string, std::string> extraPlatform;
    std::map<std::string, std::string> extraCpu;

    const std::vector<std::string>& passthru_or_empty() const;
    const std::vector<std::string>& volumes_or_empty() const;

    bool operator==(const AugmentedMetadata&) const = default;
};

/// Legacy shape: {"platform": {"architecture", "os", "features": [...]}}.
struct LegacyPlatform {
    std::string              architecture;
    std::string              os;
    std::vector<std::string> features;

    bool operator==(const LegacyPlatform&) const = default;
};

/// Throws Error(Schema) on the first violated invariant.
void validate(const AugmentedMetadata& m);

AugmentedMetadata parse_augmented(std::string_view jsonText);
std::string       serialize_augmented(const AugmentedMetadata& m, int indent = 2);

LegacyPlatform parse_legacy(std::string_view jsonText);
std::string    serialize_legacy(const LegacyPlatform& p, int indent = 2);
/// Just the inner platform object, {"architecture","os","features"}.
std::string serialize_legacy_platform(const LegacyPlatform& p);

/// How a KB feature id turns into metadata.
struct FeatureMapping {
    enum class Target { CpuFeature, Hardware, DevicesOnly };

    /// Exact KB feature id, or a prefix ending in '*' ("tee.*").
    std::string  match;
    Target       target = Target::CpuFeature;
    std::string  name;   // cpu feature name, or hardware class
    std::string  vendor; // hardware only
    FeatureLevel confirmedLevel = FeatureLevel::Required;

    bool operator==(const FeatureMapping&) const = default;
};

struct LevelPolicy {
    std::vector<FeatureMapping> mappings;

    /// tee.* -> cpu feature "SGX" (supported), gpu.nvidia -> hardware
    /// "GPU":"nVidia" (required), device.* -> pass-through devices only.
    static LevelPolicy defaults();

    /// nullptr when unmapped; throws Error(Validation) when two mappings
    /// disagree about the same feature.
    const FeatureMapping* resolve(std::string_view ruleFeature) const;
};

/// Confirmed detections map per policy; suspected ones are emitted as
/// "supported" with an annotation; base features are carried over as
/// required; /dev evidence of confirmed detections becomes pass-through.
AugmentedMetadata emit_augmented(const ScanReport& scan, const LegacyPlatform& base,
                                 const LevelPolicy& policy = LevelPolicy::defaults());

struct LossReport {
    std::vector<std::string> droppedFeatures;
    std::vector<std::string> droppedHardware;
    std::vector<std::string> droppedPassthru;
    std::vector<std::string> droppedVolumes;

    bool empty() const
    {
        return droppedFeatures.empty() && droppedHardware.empty() && droppedPassthru.empty() && droppedVolumes.empty();
    }
};

struct Downgrade {
    LegacyPlatform platform;
    LossReport     loss;
};

/// Legacy features = sorted required cpu features.
Downgrade downgrade(const AugmentedMetadata& m);

/// Level a hardware entry is enforced at; required unless annotated.
FeatureLevel hardware_level(const AugmentedMetadata& m, const std::string& deviceClass);

} // namespace hwdock
