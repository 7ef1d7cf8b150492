#include "hwdock/merged_tree.hpp"

#include <algorithm>
#include <unordered_map>

namespace hwdock {

namespace {

bool has_whiteout_ancestor(std::string_view path)
{
    auto dir = dirname(path);
    while (!dir.empty()) {
        if (basename(dir).starts_with(kWhiteoutPrefix))
            return true;
        dir = dirname(dir);
    }
    return false;
}

/// Removes every node strictly below dir whose layer is lower than layer.
void erase_below(std::map<std::string, TreeNode>& nodes, const std::string& dir, std::size_t layer)
{
    std::string prefix = dir.empty() ? std::string{} : dir + "/";
    auto        it     = nodes.lower_bound(prefix);
    while (it != nodes.end() && it->first.starts_with(prefix)) {
        if (it->second.winningLayerIndex < layer)
            it = nodes.erase(it);
        else
            ++it;
    }
}

} // namespace

bool is_dev_file(const FileEntry& entry)
{
    return entry.path.starts_with("dev/") && entry.kind != EntryKind::Directory && !entry.isWhiteout &&
           !entry.isOpaqueWhiteout;
}

std::optional<ByteView> MergedTree::content(const TreeNode& node) const
{
    if (!node.contentLayer || *node.contentLayer >= layerData.size() || !layerData[*node.contentLayer])
        return std::nullopt;
    const Bytes& data = *layerData[*node.contentLayer];
    if (node.contentOffset > data.size())
        return ByteView{};
    auto avail = std::min<std::uint64_t>(node.contentSize, data.size() - node.contentOffset);
    return ByteView(data).subspan(node.contentOffset, avail);
}

const TreeNode* MergedTree::find(const std::string& path) const
{
    auto it = nodes.find(path);
    return it == nodes.end() ? nullptr : &it->second;
}

MergedTree apply_layers(const std::vector<LayerArchive>& layers)
{
    MergedTree tree;
    tree.layerCount = layers.size();
    tree.perLayerDevPresence.assign(layers.size(), false);
    tree.perLayerUnpackedSize.assign(layers.size(), 0);
    tree.layerData.reserve(layers.size());
    auto& nodes = tree.nodes;

    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& layer = layers[k];
        tree.layerData.push_back(layer.data);
        const std::string tag = "layer " + std::to_string(k) + ": ";

        std::vector<const FileEntry*> whiteouts;
        // last occurrence of a path in archive order wins within a layer
        std::unordered_map<std::string, const FileEntry*> creates;
        std::vector<std::string>                          createOrder;

        for (const auto& e : layer.entries) {
            if (escapes_root(e.path)) {
                tree.securityFindings.push_back(tag + "rejected path traversal entry \"" + e.path + "\"");
                continue;
            }
            if (e.kind == EntryKind::Hardlink && e.linkTarget && escapes_root(*e.linkTarget)) {
                tree.securityFindings.push_back(tag + "rejected hardlink \"" + e.path + "\" escaping to \"" +
                                                *e.linkTarget + "\"");
                continue;
            }
            if (has_whiteout_ancestor(e.path)) {
                tree.securityFindings.push_back(tag + "rejected entry below a whiteout-named directory \"" +
                                                e.path + "\"");
                continue;
            }
            if (e.isWhiteout || e.isOpaqueWhiteout) {
                whiteouts.push_back(&e);
                continue;
            }
            if (e.kind == EntryKind::Regular)
                tree.perLayerUnpackedSize[k] += e.byteSize;
            if (is_dev_file(e))
                tree.perLayerDevPresence[k] = true;
            auto [it, inserted] = creates.try_emplace(e.path, &e);
            if (inserted)
                createOrder.push_back(e.path);
            else
                it->second = &e;
        }

        // whiteouts only hide lower layers, so they go first
        for (const auto* w : whiteouts) {
            std::string dir(dirname(w->path));
            if (w->isOpaqueWhiteout) {
                erase_below(nodes, dir, k);
                continue;
            }
            auto name = basename(w->path).substr(kWhiteoutPrefix.size());
            if (name.empty() || name.starts_with(kWhiteoutPrefix))
                continue; // other .wh..wh. metadata markers
            std::string target = dir.empty() ? std::string(name) : dir + "/" + std::string(name);
            if (auto it = nodes.find(target); it != nodes.end() && it->second.winningLayerIndex < k)
                nodes.erase(it);
            erase_below(nodes, target, k);
        }

        std::sort(createOrder.begin(), createOrder.end());
        std::vector<std::string> hardlinks;
        for (const auto& path : createOrder) {
            const FileEntry& e = *creates.at(path);

            for (auto anc = std::string(dirname(path)); !anc.empty(); anc = std::string(dirname(anc))) {
                auto it = nodes.find(anc);
                if (it == nodes.end() || it->second.winningLayerIndex >= k)
                    continue;
                auto kind = it->second.entry.kind;
                if (kind == EntryKind::Directory || kind == EntryKind::Symlink)
                    continue;
                tree.notes.push_back(tag + "kind conflict: " + std::string(to_string(kind)) + " \"" + anc +
                                     "\" from layer " + std::to_string(it->second.winningLayerIndex) +
                                     " replaced by a directory");
                nodes.erase(it);
            }

            if (auto it = nodes.find(path); it != nodes.end() && it->second.winningLayerIndex < k) {
                auto oldKind = it->second.entry.kind;
                bool oldDir  = oldKind == EntryKind::Directory;
                bool newDir  = e.kind == EntryKind::Directory;
                if (oldDir != newDir)
                    tree.notes.push_back(tag + "kind conflict: " + std::string(to_string(oldKind)) + " \"" + path +
                                         "\" from layer " + std::to_string(it->second.winningLayerIndex) +
                                         " replaced by " + to_string(e.kind));
            }
            // a non-directory hides everything lower layers put below it,
            // whether or not they listed the directory itself
            if (e.kind != EntryKind::Directory)
                erase_below(nodes, path, k);

            TreeNode node;
            node.winningLayerIndex = k;
            node.entry             = e;
            if (e.kind == EntryKind::Regular) {
                node.contentLayer  = k;
                node.contentOffset = e.contentOffset;
                node.contentSize   = e.byteSize;
            }
            nodes[path] = std::move(node);
            if (e.kind == EntryKind::Hardlink)
                hardlinks.push_back(path);
        }

        for (const auto& path : hardlinks) {
            TreeNode&       node   = nodes.at(path);
            const TreeNode* target = nullptr;
            std::string     next   = node.entry.linkTarget.value_or("");
            for (int hop = 0; hop < 8 && !next.empty(); ++hop) {
                auto it = nodes.find(next);
                if (it == nodes.end() || it->first == path)
                    break;
                if (it->second.contentLayer) {
                    target = &it->second;
                    break;
                }
                if (it->second.entry.kind != EntryKind::Hardlink)
                    break;
                next = it->second.entry.linkTarget.value_or("");
            }
            if (target == nullptr) {
                tree.notes.push_back(tag + "dangling hardlink \"" + path + "\" -> \"" +
                                     node.entry.linkTarget.value_or("") + "\"");
                continue;
            }
            node.contentLayer  = target->contentLayer;
            node.contentOffset = target->contentOffset;
            node.contentSize   = target->contentSize;
            node.entry.byteSize = target->contentSize;
        }
    }
    return tree;
}

std::vector<DevEntry> list_dev_entries(const MergedTree& tree)
{
    std::vector<DevEntry> out;
    for (auto it = tree.nodes.lower_bound("dev/"); it != tree.nodes.end() && it->first.starts_with("dev/"); ++it)
        if (is_dev_file(it->second.entry))
            out.push_back({it->first, it->second.winningLayerIndex, it->second.entry.kind});
    return out;
}

} // namespace hwdock
