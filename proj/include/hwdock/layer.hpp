#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bytes.hpp"

namespace hwdock {

enum class EntryKind { Regular, Directory, Symlink, CharDevice, BlockDevice, Fifo, Hardlink };

const char* to_string(EntryKind kind);

inline constexpr std::string_view kWhiteoutPrefix = ".wh.";
inline constexpr std::string_view kOpaqueMarker   = ".wh..wh..opq";

struct FileEntry {
    std::string                path;
    EntryKind                  kind     = EntryKind::Regular;
    std::uint64_t              byteSize = 0;
    std::optional<std::string> linkTarget;
    bool                       isWhiteout       = false;
    bool                       isOpaqueWhiteout = false;
    /// Offset of the member data inside LayerArchive::data (regular files).
    std::uint64_t contentOffset = 0;

    bool operator==(const FileEntry&) const = default;
};

struct LayerArchive {
    std::string                       digest;
    std::vector<FileEntry>            entries;
    std::uint64_t                     byteSize = 0;
    std::shared_ptr<const Bytes>      data;

    ByteView content(const FileEntry& e) const;
};

/// Lexical normalization: strips leading "/" and "./", collapses "//" and
/// "." and resolves inner "..". A ".." that climbs above the root is kept as
/// a leading "../" so callers can reject it.
std::string normalize_path(std::string_view raw);

bool        escapes_root(std::string_view normalizedPath);
std::string_view basename(std::string_view path);
std::string_view dirname(std::string_view path);

/// Builds a FileEntry (whiteout flags derived from the final component).
FileEntry make_entry(std::string_view rawPath, EntryKind kind, std::uint64_t size = 0,
                     std::optional<std::string> linkTarget = std::nullopt);

/// Parses a layer tar (gzip detected by magic bytes). digest is computed
/// over the blob as given, i.e. before decompression.
LayerArchive read_layer(ByteView blob);

} // namespace hwdock
