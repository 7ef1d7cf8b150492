#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace hwdock {

inline constexpr std::string_view kOfficialRegistry = "registry-1.docker.io";

struct ImageRef {
    std::string                registry;
    std::string                repository;
    std::optional<std::string> tag;
    std::optional<std::string> digest;

    /// Tag if present, else digest; what goes after /manifests/.
    std::string reference() const { return digest ? *digest : tag.value_or("latest"); }
    std::string to_string() const;

    bool operator==(const ImageRef&) const = default;
};

/// Accepts "registry/repo:tag", "repo@sha256:<hex>", "repo:tag", bare "repo".
/// A first segment containing '.', ':' or equal to "localhost" is a registry
/// host. Bare single-segment names on the official registry get "library/".
ImageRef resolve_ref(std::string_view text);

} // namespace hwdock
