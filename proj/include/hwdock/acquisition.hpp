#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bytes.hpp"
#include "image_ref.hpp"
#include "layer.hpp"
#include "manifest.hpp"
#include "registry.hpp"

namespace hwdock {

/// One image inside a saved archive. Layer blobs are kept as stored
/// (possibly compressed); `layerDigests` are their content addresses.
struct SavedImage {
    std::vector<std::string>   repoTags;
    std::string                manifestDigest;
    std::optional<std::string> configDigest;
    std::string                architecture;
    std::string                os;
    std::vector<std::string>   layerDigests;
};

struct SavedImageArchive {
    std::string             path;
    /// "docker-save" (manifest.json) or "oci" (index.json + blobs/).
    std::string             format;
    std::vector<SavedImage> images;
    std::map<std::string, std::shared_ptr<const Bytes>> blobs;

    /// Unpacked layers of one image, base to top.
    std::vector<LayerArchive> layers(const SavedImage& image) const;
    std::optional<Bytes>      config(const SavedImage& image) const;
};

/// Reads the layout written by `docker save` / OCI image export. Throws
/// IncompleteArchive listing absent digests, Parse("no manifest found").
SavedImageArchive load_saved_archive(const std::string& path);
SavedImageArchive parse_saved_archive(ByteView tarBytes, const std::string& path = {});

/// Writes a docker-save style archive for one image (layer blobs as given).
Bytes write_saved_archive(const std::vector<std::string>& repoTags, const Bytes& config,
                          const std::vector<Bytes>& layerBlobs);

/// An image ready for scanning, however it was acquired.
struct AcquiredImage {
    std::string               name;
    std::string               manifestDigest;
    std::string               architecture;
    std::string               os;
    std::string               servedMediaType;
    std::vector<LayerArchive> layers;
};

/// Manifest (index -> platform) -> config -> layers, using `cache` when given.
AcquiredImage pull_image(RegistryClient& client, const ImageRef& ref, const PlatformQuery& platform,
                         const BlobCache* cache = nullptr);

/// Picks the image matching `platform` (or the only image) from an archive.
AcquiredImage acquire_from_archive(const SavedImageArchive& archive, const std::optional<PlatformQuery>& platform);

} // namespace hwdock
