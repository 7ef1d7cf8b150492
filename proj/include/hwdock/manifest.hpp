#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bytes.hpp"

namespace hwdock {

namespace media_type {
inline constexpr std::string_view kDockerManifest = "application/vnd.docker.distribution.manifest.v2+json";
inline constexpr std::string_view kDockerManifestList =
    "application/vnd.docker.distribution.manifest.list.v2+json";
inline constexpr std::string_view kOciManifest = "application/vnd.oci.image.manifest.v1+json";
inline constexpr std::string_view kOciIndex    = "application/vnd.oci.image.index.v1+json";
} // namespace media_type

enum class ManifestKind { SinglePlatform, MultiPlatformIndex };

struct PlatformEntry {
    std::string              architecture;
    std::string              os;
    std::string              variant;
    std::vector<std::string> features;
    std::string              manifestDigest;
    std::uint64_t            size = 0;

    std::string platform() const { return os + "/" + architecture; }

    bool operator==(const PlatformEntry&) const = default;
};

struct LayerDescriptor {
    std::string   digest;
    std::uint64_t byteSize = 0;
    std::string   mediaTypeTag;

    bool operator==(const LayerDescriptor&) const = default;
};

struct ManifestDoc {
    ManifestKind                 kind = ManifestKind::SinglePlatform;
    std::string                  mediaType;
    std::vector<PlatformEntry>   platformEntries;
    std::vector<LayerDescriptor> layerDescriptors;
    std::optional<std::string>   configDigest;
    std::string                  rawDigest;
    std::size_t                  unknownFieldCount = 0;
};

/// Accepts docker v2 schema 2 manifests and manifest lists, OCI manifests
/// and OCI indexes. rawDigest is computed over the exact input bytes.
ManifestDoc parse_manifest(ByteView bytes);

/// Canonical JSON of the semantic fields only (sorted keys, no whitespace).
std::string canonical_manifest_json(const ManifestDoc& doc);

/// sha256 of canonical_manifest_json(); stable across formatting changes.
std::string semantic_digest(const ManifestDoc& doc);

struct PlatformQuery {
    std::string architecture;
    std::string os;
};

/// Exact architecture/os match; throws NotFound ("architecture unavailable")
/// or Ambiguous. Never falls back to another architecture.
const PlatformEntry& select_platform(const ManifestDoc& doc, const PlatformQuery& query);

} // namespace hwdock
