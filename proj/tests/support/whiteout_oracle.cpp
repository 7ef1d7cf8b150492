#include "whiteout_oracle.hpp"

#include <algorithm>
#include <set>

#include "image_builder.hpp"

namespace hwdock::testing {

namespace {

bool strictly_below(const std::string& p, const std::string& anc)
{
    return p.size() > anc.size() && p.compare(0, anc.size(), anc) == 0 && p[anc.size()] == '/';
}

std::vector<std::string> universe()
{
    std::vector<std::string> out;
    const char*              names[] = {"a", "b", "c", "d"};
    for (auto x : names) {
        out.push_back(x);
        for (auto y : names) {
            out.push_back(std::string(x) + "/" + y);
            for (auto z : names)
                out.push_back(std::string(x) + "/" + y + "/" + z);
        }
    }
    return out;
}

} // namespace

std::vector<OpLayer> random_case(std::mt19937_64& rng, std::size_t maxLayers, std::size_t maxPaths)
{
    static const auto all = universe();
    std::vector<std::string> pool = all;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(1 + rng() % std::min(maxPaths, pool.size()));

    std::size_t          layerCount = 1 + rng() % maxLayers;
    std::vector<OpLayer> layers(layerCount);
    for (auto& layer : layers) {
        std::set<std::string> used;
        std::set<std::string> files;
        std::size_t           n = rng() % (pool.size() + 1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = pool[rng() % pool.size()];
            if (used.contains(p))
                continue;
            LayerOp op;
            op.path = p;
            auto r  = rng() % 10;
            op.kind = r < 5 ? LayerOp::Kind::File : r < 7 ? LayerOp::Kind::Dir : r < 9 ? LayerOp::Kind::Whiteout
                                                                                    : LayerOp::Kind::Opaque;
            bool creates = op.kind == LayerOp::Kind::File || op.kind == LayerOp::Kind::Dir;
            // a layer cannot hold entries below one of its own files
            bool blocked = false;
            for (const auto& f : files)
                if (strictly_below(p, f))
                    blocked = true;
            if (op.kind == LayerOp::Kind::File)
                for (const auto& u : used)
                    if (strictly_below(u, p))
                        blocked = true;
            if (blocked && (creates || op.kind == LayerOp::Kind::Opaque))
                continue;
            used.insert(p);
            if (op.kind == LayerOp::Kind::File)
                files.insert(p);
            layer.push_back(op);
        }
        std::shuffle(layer.begin(), layer.end(), rng);
    }
    return layers;
}

LayerArchive to_layer(const OpLayer& ops)
{
    LayerBuilder b;
    for (const auto& op : ops) {
        switch (op.kind) {
        case LayerOp::Kind::File: b.file(op.path, "content of " + op.path); break;
        case LayerOp::Kind::Dir: b.dir(op.path); break;
        case LayerOp::Kind::Whiteout: b.whiteout(op.path); break;
        case LayerOp::Kind::Opaque: b.opaque(op.path); break;
        }
    }
    return b.archive();
}

Visible oracle(const std::vector<OpLayer>& layers)
{
    std::set<std::string> paths;
    for (const auto& l : layers)
        for (const auto& op : l)
            if (op.kind == LayerOp::Kind::File || op.kind == LayerOp::Kind::Dir)
                paths.insert(op.path);

    Visible out;
    for (const auto& p : paths) {
        std::size_t k    = 0;
        auto        kind = LayerOp::Kind::File;
        for (std::size_t i = 0; i < layers.size(); ++i)
            for (const auto& op : layers[i])
                if (op.path == p && (op.kind == LayerOp::Kind::File || op.kind == LayerOp::Kind::Dir))
                    k = i, kind = op.kind;

        bool hidden = false;
        for (std::size_t j = k + 1; j < layers.size() && !hidden; ++j) {
            for (const auto& op : layers[j]) {
                bool onSelfOrAncestor = op.path == p || strictly_below(p, op.path);
                bool onAncestor       = strictly_below(p, op.path);
                switch (op.kind) {
                case LayerOp::Kind::Whiteout: hidden |= onSelfOrAncestor; break;
                case LayerOp::Kind::Opaque: hidden |= onAncestor; break;
                case LayerOp::Kind::File: hidden |= onAncestor; break;
                case LayerOp::Kind::Dir: break;
                }
                bool createsBelow =
                    (op.kind == LayerOp::Kind::File || op.kind == LayerOp::Kind::Dir) && strictly_below(op.path, p);
                if (kind == LayerOp::Kind::File && createsBelow)
                    hidden = true;
            }
        }
        if (!hidden)
            out[p] = {k, kind == LayerOp::Kind::File ? EntryKind::Regular : EntryKind::Directory};
    }
    return out;
}

Visible observed(const MergedTree& tree)
{
    Visible out;
    for (const auto& [path, node] : tree.nodes)
        out[path] = {node.winningLayerIndex, node.entry.kind};
    return out;
}

} // namespace hwdock::testing
