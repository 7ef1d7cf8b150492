#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hwdock {

std::string lowercase(std::string_view s);

/// Host CPU flags (lowercase, as in /proc/cpuinfo) any of which satisfies a
/// metadata feature name. "SGX" -> {sgx}, "sse4" -> {sse4_1, sse4_2};
/// unknown names map to their lowercase form.
std::vector<std::string> host_flags_for_feature(std::string_view featureName);

/// Canonical display name used in metadata for a KB feature id
/// ("tee.sgx" -> "SGX"); nullopt when there is none.
std::optional<std::string> display_name_for_rule_feature(std::string_view ruleFeature);

/// Feature that a pass-through device belongs to: "SGX" for the SGX driver
/// nodes, "hardware.GPU" for /dev/nvidia*; nullopt for unowned devices.
std::optional<std::string> owning_feature_for_device(std::string_view devicePath);

/// Device globs that evidence a hardware entry on the host ("GPU"/"nVidia"
/// -> /dev/nvidia*). Empty when the class is unknown.
std::vector<std::string> device_globs_for_hardware(std::string_view deviceClass, std::string_view vendor);

/// uname / cpuinfo spellings to registry spellings ("x86_64" -> "amd64").
std::string normalize_architecture(std::string_view arch);

} // namespace hwdock
