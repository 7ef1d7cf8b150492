#include "hwdock/layer.hpp"

#include "hwdock/digest.hpp"
#include "hwdock/error.hpp"
#include "hwdock/gzip.hpp"
#include "hwdock/tar.hpp"

namespace hwdock {

const char* to_string(EntryKind kind)
{
    switch (kind) {
    case EntryKind::Regular: return "regular";
    case EntryKind::Directory: return "directory";
    case EntryKind::Symlink: return "symlink";
    case EntryKind::CharDevice: return "char-device";
    case EntryKind::BlockDevice: return "block-device";
    case EntryKind::Fifo: return "fifo";
    case EntryKind::Hardlink: return "hardlink";
    }
    return "unknown";
}

ByteView LayerArchive::content(const FileEntry& e) const
{
    if (!data || e.kind != EntryKind::Regular || e.contentOffset + e.byteSize > data->size())
        return {};
    return ByteView(*data).subspan(e.contentOffset, e.byteSize);
}

std::string normalize_path(std::string_view raw)
{
    std::vector<std::string_view> parts;
    std::size_t                   i = 0;
    while (i <= raw.size()) {
        auto j = raw.find('/', i);
        if (j == std::string_view::npos)
            j = raw.size();
        auto part = raw.substr(i, j - i);
        if (part.empty() || part == ".") {
            // skip
        } else if (part == "..") {
            if (!parts.empty() && parts.back() != "..")
                parts.pop_back();
            else
                parts.push_back(part);
        } else {
            parts.push_back(part);
        }
        i = j + 1;
    }
    std::string out;
    for (auto p : parts) {
        if (!out.empty())
            out.push_back('/');
        out.append(p);
    }
    return out;
}

bool escapes_root(std::string_view p)
{
    return p == ".." || p.starts_with("../");
}

std::string_view basename(std::string_view path)
{
    auto pos = path.rfind('/');
    return pos == std::string_view::npos ? path : path.substr(pos + 1);
}

std::string_view dirname(std::string_view path)
{
    auto pos = path.rfind('/');
    return pos == std::string_view::npos ? std::string_view{} : path.substr(0, pos);
}

FileEntry make_entry(std::string_view rawPath, EntryKind kind, std::uint64_t size,
                     std::optional<std::string> linkTarget)
{
    FileEntry e;
    e.path             = normalize_path(rawPath);
    e.kind             = kind;
    e.byteSize         = kind == EntryKind::Regular ? size : 0;
    e.linkTarget       = std::move(linkTarget);
    auto base          = basename(e.path);
    e.isOpaqueWhiteout = base == kOpaqueMarker;
    e.isWhiteout       = !e.isOpaqueWhiteout && base.starts_with(kWhiteoutPrefix);
    return e;
}

LayerArchive read_layer(ByteView blob)
{
    LayerArchive layer;
    layer.digest   = sha256_digest(blob);
    layer.byteSize = blob.size();
    auto data      = std::make_shared<Bytes>(maybe_gunzip(blob));

    tar::for_each_member(*data, [&](const tar::Member& m) {
        EntryKind kind = EntryKind::Regular;
        switch (m.type) {
        case tar::Type::Regular: kind = EntryKind::Regular; break;
        case tar::Type::Directory: kind = EntryKind::Directory; break;
        case tar::Type::Symlink: kind = EntryKind::Symlink; break;
        case tar::Type::Hardlink: kind = EntryKind::Hardlink; break;
        case tar::Type::CharDev: kind = EntryKind::CharDevice; break;
        case tar::Type::BlockDev: kind = EntryKind::BlockDevice; break;
        case tar::Type::Fifo: kind = EntryKind::Fifo; break;
        }
        std::optional<std::string> link;
        if (kind == EntryKind::Hardlink)
            link = normalize_path(m.linkTarget);
        else if (kind == EntryKind::Symlink)
            link = m.linkTarget;
        FileEntry e     = make_entry(m.path, kind, m.size, std::move(link));
        e.contentOffset = m.dataOffset;
        if (e.path.empty())
            return; // the archive root "./"
        layer.entries.push_back(std::move(e));
    });
    layer.data = std::move(data);
    return layer;
}

} // namespace hwdock
