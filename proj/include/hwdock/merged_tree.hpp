#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "layer.hpp"

namespace hwdock {

struct TreeNode {
    std::size_t winningLayerIndex = 0;
    FileEntry   entry;
    /// Regular files and resolved hardlinks; absent for everything else.
    std::optional<std::size_t>   contentLayer;
    std::uint64_t                contentOffset = 0;
    std::uint64_t                contentSize   = 0;
};

struct MergedTree {
    std::map<std::string, TreeNode>        nodes;
    std::vector<bool>                      perLayerDevPresence;
    std::vector<std::uint64_t>             perLayerUnpackedSize;
    std::size_t                            layerCount = 0;
    std::vector<std::shared_ptr<const Bytes>> layerData;
    /// Rejected entries (path traversal, whiteout-named directories).
    std::vector<std::string> securityFindings;
    /// Kind conflicts and other non-fatal events.
    std::vector<std::string> notes;

    /// nullopt when the node has no content (non-regular entries).
    std::optional<ByteView> content(const TreeNode& node) const;
    const TreeNode*         find(const std::string& path) const;
};

/// Unions ordered layers (base first) with OCI whiteout semantics.
MergedTree apply_layers(const std::vector<LayerArchive>& layers);

struct DevEntry {
    std::string path;
    std::size_t winningLayerIndex = 0;
    EntryKind   kind              = EntryKind::Regular;

    bool operator==(const DevEntry&) const = default;
};

/// Visible non-directory entries strictly below dev/, sorted by path.
std::vector<DevEntry> list_dev_entries(const MergedTree& tree);

/// True for a path strictly below dev/ that counts as a device-tree file.
bool is_dev_file(const FileEntry& entry);

} // namespace hwdock
