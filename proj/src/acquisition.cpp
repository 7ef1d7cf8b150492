#include "hwdock/acquisition.hpp"

#include <functional>
#include <set>

#include <json.hpp>

#include "hwdock/digest.hpp"
#include "hwdock/error.hpp"
#include "hwdock/feature_names.hpp"
#include "hwdock/gzip.hpp"
#include "hwdock/tar.hpp"

namespace hwdock {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (const auto& s : items) {
        if (!out.empty())
            out += ", ";
        out += s;
    }
    return out;
}

json parse_json(const Bytes& data, const std::string& what)
{
    try {
        return json::parse(data.begin(), data.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, what + ": malformed JSON at byte " + std::to_string(e.byte));
    }
}

void read_platform(const Bytes& config, std::string& arch, std::string& os)
{
    try {
        auto j = json::parse(config.begin(), config.end());
        if (j.is_object()) {
            arch = j.value("architecture", arch);
            os   = j.value("os", os);
        }
    } catch (const json::exception&) {
    }
}

std::string blob_member(const std::string& digest)
{
    return "blobs/sha256/" + std::string(digest_hex(digest));
}

/// "sha256:<hex>" for layer members named "<hex>/layer.tar" or
/// "blobs/sha256/<hex>", else the member name itself.
std::string member_digest(const std::string& name)
{
    std::string hex = name;
    if (hex.ends_with("/layer.tar"))
        hex.resize(hex.size() - std::string_view("/layer.tar").size());
    else if (hex.starts_with("blobs/sha256/"))
        hex = hex.substr(std::string_view("blobs/sha256/").size());
    return is_valid_digest("sha256:" + hex) ? "sha256:" + hex : name;
}

void load_docker_save(SavedImageArchive& out, const std::map<std::string, std::shared_ptr<const Bytes>>& members)
{
    auto doc = parse_json(*members.at("manifest.json"), "manifest.json");
    if (!doc.is_array() || doc.empty())
        throw Error(ErrorKind::Parse, "no manifest found");

    std::vector<std::string> absent;
    for (const auto& m : doc) {
        SavedImage img;
        if (m.contains("RepoTags") && m["RepoTags"].is_array())
            for (const auto& t : m["RepoTags"])
                img.repoTags.push_back(t.get<std::string>());

        std::vector<std::string> diffIds;
        auto                     configName = normalize_path(m.value("Config", std::string{}));
        if (auto it = members.find(configName); it != members.end()) {
            img.configDigest = sha256_digest(*it->second);
            out.blobs.emplace(*img.configDigest, it->second);
            read_platform(*it->second, img.architecture, img.os);
            try {
                auto c = json::parse(it->second->begin(), it->second->end());
                for (const auto& d : c.at("rootfs").at("diff_ids"))
                    diffIds.push_back(d.get<std::string>());
            } catch (const json::exception&) {
            }
        } else if (!configName.empty()) {
            absent.push_back(configName);
        }

        if (!m.contains("Layers") || !m["Layers"].is_array())
            throw Error(ErrorKind::Schema, "manifest.json: Layers missing");
        std::size_t idx = 0;
        for (const auto& l : m["Layers"]) {
            auto name = normalize_path(l.get<std::string>());
            auto it   = members.find(name);
            if (it == members.end()) {
                absent.push_back(idx < diffIds.size() ? diffIds[idx] : member_digest(name));
            } else {
                auto d = sha256_digest(*it->second);
                out.blobs.emplace(d, it->second);
                img.layerDigests.push_back(d);
            }
            ++idx;
        }
        img.manifestDigest = sha256_digest(as_bytes(m.dump()));
        out.images.push_back(std::move(img));
    }
    if (!absent.empty())
        throw Error(ErrorKind::IncompleteArchive, "incomplete archive: missing " + join(absent));
}

void load_oci(SavedImageArchive& out, const std::map<std::string, std::shared_ptr<const Bytes>>& members)
{
    std::vector<std::string> absent;
    auto blob = [&](const std::string& digest) -> std::shared_ptr<const Bytes> {
        if (!is_valid_digest(digest))
            throw Error(ErrorKind::Parse, "malformed digest in archive: " + digest);
        auto it = members.find(blob_member(digest));
        if (it == members.end()) {
            absent.push_back(digest);
            return nullptr;
        }
        auto actual = sha256_digest(*it->second);
        if (actual != digest)
            throw Error(ErrorKind::Integrity, "blob digest mismatch: expected " + digest + ", actual " + actual);
        out.blobs.emplace(digest, it->second);
        return it->second;
    };

    auto index = parse_json(*members.at("index.json"), "index.json");
    if (!index.contains("manifests") || !index["manifests"].is_array() || index["manifests"].empty())
        throw Error(ErrorKind::Parse, "no manifest found");

    std::set<std::string> seen;
    std::function<void(const std::string&, const std::vector<std::string>&)> visit =
        [&](const std::string& digest, const std::vector<std::string>& names) {
            if (!seen.insert(digest).second)
                return;
            auto data = blob(digest);
            if (!data)
                return;
            auto doc = parse_manifest(*data);
            if (doc.kind == ManifestKind::MultiPlatformIndex) {
                for (const auto& e : doc.platformEntries)
                    visit(e.manifestDigest, names);
                return;
            }
            SavedImage img;
            img.repoTags       = names;
            img.manifestDigest = digest;
            img.configDigest   = doc.configDigest;
            if (doc.configDigest)
                if (auto c = blob(*doc.configDigest))
                    read_platform(*c, img.architecture, img.os);
            for (const auto& l : doc.layerDescriptors)
                if (blob(l.digest))
                    img.layerDigests.push_back(l.digest);
            out.images.push_back(std::move(img));
        };

    for (const auto& d : index["manifests"]) {
        std::vector<std::string> names;
        if (d.contains("annotations") && d["annotations"].is_object()) {
            const auto& a = d["annotations"];
            if (a.contains("io.containerd.image.name"))
                names.push_back(a["io.containerd.image.name"].get<std::string>());
            else if (a.contains("org.opencontainers.image.ref.name"))
                names.push_back(a["org.opencontainers.image.ref.name"].get<std::string>());
        }
        visit(d.value("digest", std::string{}), names);
    }
    if (!absent.empty())
        throw Error(ErrorKind::IncompleteArchive, "incomplete archive: missing " + join(absent));
    if (out.images.empty())
        throw Error(ErrorKind::Parse, "no manifest found");
}

} // namespace

std::vector<LayerArchive> SavedImageArchive::layers(const SavedImage& image) const
{
    std::vector<LayerArchive> out;
    for (const auto& d : image.layerDigests) {
        auto layer   = read_layer(*blobs.at(d));
        layer.digest = d;
        out.push_back(std::move(layer));
    }
    return out;
}

std::optional<Bytes> SavedImageArchive::config(const SavedImage& image) const
{
    if (!image.configDigest)
        return std::nullopt;
    auto it = blobs.find(*image.configDigest);
    if (it == blobs.end())
        return std::nullopt;
    return *it->second;
}

SavedImageArchive parse_saved_archive(ByteView tarBytes, const std::string& path)
{
    std::map<std::string, std::shared_ptr<const Bytes>> members;
    tar::for_each_member(tarBytes, [&](const tar::Member& m) {
        if (m.type != tar::Type::Regular)
            return;
        auto data = tarBytes.subspan(m.dataOffset, m.size);
        members[normalize_path(m.path)] = std::make_shared<const Bytes>(data.begin(), data.end());
    });

    SavedImageArchive out;
    out.path = path;
    if (members.contains("manifest.json")) {
        out.format = "docker-save";
        load_docker_save(out, members);
    } else if (members.contains("index.json")) {
        out.format = "oci";
        load_oci(out, members);
    } else {
        throw Error(ErrorKind::Parse, "no manifest found");
    }
    return out;
}

SavedImageArchive load_saved_archive(const std::string& path)
{
    auto data = read_file(path);
    // `docker save | gzip` is common enough to accept transparently.
    auto tarBytes = maybe_gunzip(data);
    return parse_saved_archive(tarBytes, path);
}

Bytes write_saved_archive(const std::vector<std::string>& repoTags, const Bytes& config,
                          const std::vector<Bytes>& layerBlobs)
{
    tar::Writer w;
    auto        configName = std::string(digest_hex(sha256_digest(config))) + ".json";
    w.add_file(configName, ByteView(config));
    json layers = json::array();
    for (const auto& blob : layerBlobs) {
        auto hex  = std::string(digest_hex(sha256_digest(blob)));
        auto name = hex + "/layer.tar";
        w.add_directory(hex);
        w.add_file(name, ByteView(blob));
        layers.push_back(name);
    }
    json manifest = json::array({{{"Config", configName}, {"RepoTags", repoTags}, {"Layers", layers}}});
    w.add_file("manifest.json", manifest.dump());
    return w.finish();
}

AcquiredImage acquire_from_archive(const SavedImageArchive& archive, const std::optional<PlatformQuery>& platform)
{
    const SavedImage* chosen = nullptr;
    if (archive.images.size() == 1) {
        chosen = &archive.images.front();
    } else {
        std::vector<std::string> available;
        for (const auto& img : archive.images) {
            available.push_back("\"" + img.architecture + "/" + img.os + "\"");
            if (platform && normalize_architecture(img.architecture) == normalize_architecture(platform->architecture) &&
                img.os == platform->os) {
                if (chosen)
                    throw Error(ErrorKind::Ambiguous, "archive holds several " + platform->architecture + "/" +
                                                          platform->os + " images: " + chosen->manifestDigest + ", " +
                                                          img.manifestDigest);
                chosen = &img;
            }
        }
        if (!chosen) {
            std::string want = platform ? platform->architecture + "/" + platform->os : std::string("(unspecified)");
            throw Error(ErrorKind::NotFound,
                        "architecture unavailable: " + want + "; available platforms: [" + join(available) + "]");
        }
    }

    AcquiredImage out;
    out.name           = chosen->repoTags.empty() ? archive.path : chosen->repoTags.front();
    out.manifestDigest = chosen->manifestDigest;
    out.architecture   = chosen->architecture;
    out.os             = chosen->os;
    out.layers         = archive.layers(*chosen);
    return out;
}

AcquiredImage pull_image(RegistryClient& client, const ImageRef& ref, const PlatformQuery& platform,
                         const BlobCache* cache)
{
    AcquiredImage out;
    out.name = ref.to_string();

    auto top            = client.fetch_manifest(ref);
    out.servedMediaType = top.mediaType;
    ManifestResult single = top;
    if (top.doc.kind == ManifestKind::MultiPlatformIndex) {
        const auto& entry = select_platform(top.doc, platform);
        single            = client.fetch_manifest(ref, entry.manifestDigest);
        out.architecture  = entry.architecture;
        out.os            = entry.os;
        if (single.doc.kind != ManifestKind::SinglePlatform)
            throw Error(ErrorKind::Unsupported, "nested image index at " + entry.manifestDigest);
    }
    out.manifestDigest = single.digest;

    auto get = [&](const std::vector<std::string>& digests) {
        std::vector<Bytes>       blobs(digests.size());
        std::vector<std::string> missing;
        std::vector<std::size_t> missingIdx;
        for (std::size_t i = 0; i < digests.size(); ++i) {
            if (cache)
                if (auto hit = cache->get(digests[i])) {
                    blobs[i] = std::move(*hit);
                    continue;
                }
            missing.push_back(digests[i]);
            missingIdx.push_back(i);
        }
        auto fetched = client.fetch_blobs(ref, missing);
        for (std::size_t k = 0; k < fetched.size(); ++k) {
            if (cache)
                cache->put(missing[k], fetched[k]);
            blobs[missingIdx[k]] = std::move(fetched[k]);
        }
        return blobs;
    };

    if (single.doc.configDigest) {
        auto config = get({*single.doc.configDigest});
        read_platform(config.front(), out.architecture, out.os);
    }
    std::vector<std::string> digests;
    for (const auto& l : single.doc.layerDescriptors)
        digests.push_back(l.digest);
    for (auto& blob : get(digests)) {
        auto layer = read_layer(blob);
        out.layers.push_back(std::move(layer));
    }
    if (out.architecture.empty())
        out.architecture = platform.architecture;
    if (out.os.empty())
        out.os = platform.os;
    return out;
}

} // namespace hwdock
