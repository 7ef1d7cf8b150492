#include "hwdock/manifest.hpp"

#include <set>

#include <json.hpp>

#include "hwdock/digest.hpp"
#include "hwdock/error.hpp"

namespace hwdock {

using nlohmann::json;

namespace {

const std::set<std::string> kTopKeys   = {"schemaVersion", "mediaType", "config",  "layers",
                                          "manifests",     "annotations", "subject", "artifactType"};
const std::set<std::string> kDescKeys  = {"mediaType", "digest", "size", "urls", "annotations", "platform",
                                          "artifactType", "data"};
const std::set<std::string> kPlatKeys  = {"architecture", "os", "variant", "features", "os.version", "os.features"};

std::size_t count_unknown(const json& obj, const std::set<std::string>& known)
{
    std::size_t n = 0;
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.contains(it.key()))
            ++n;
    return n;
}

std::string require_string(const json& obj, const std::string& key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw Error(ErrorKind::Schema, where + key + " missing");
    return it->get<std::string>();
}

std::uint64_t optional_size(const json& obj, const std::string& where)
{
    auto it = obj.find("size");
    if (it == obj.end())
        return 0;
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
        throw Error(ErrorKind::Schema, where + "size is not a non-negative integer");
    return it->get<std::uint64_t>();
}

std::string layer_tag(const std::string& mediaType)
{
    if (mediaType.ends_with("tar.gzip") || mediaType.ends_with("tar+gzip"))
        return "tar+gzip";
    if (mediaType.ends_with("tar+zstd") || mediaType.ends_with("tar.zstd"))
        return "tar+zstd";
    if (mediaType.ends_with(".tar"))
        return "tar";
    if (mediaType.find("foreign") != std::string::npos || mediaType.find("nondistributable") != std::string::npos)
        return "foreign";
    return mediaType.empty() ? "tar+gzip" : "other:" + mediaType;
}

} // namespace

ManifestDoc parse_manifest(ByteView bytes)
{
    json root;
    try {
        root = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse,
                    "malformed manifest JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!root.is_object())
        throw Error(ErrorKind::Schema, "manifest is not a JSON object");
    if (auto sv = root.find("schemaVersion"); sv != root.end() && sv->is_number() && sv->get<int>() == 1)
        throw Error(ErrorKind::Unsupported, "schema 1 manifests are not supported");

    ManifestDoc doc;
    doc.rawDigest         = sha256_digest(bytes);
    doc.mediaType         = root.value("mediaType", std::string{});
    doc.unknownFieldCount = count_unknown(root, kTopKeys);

    bool isIndex = false;
    if (doc.mediaType == media_type::kDockerManifestList || doc.mediaType == media_type::kOciIndex)
        isIndex = true;
    else if (doc.mediaType == media_type::kDockerManifest || doc.mediaType == media_type::kOciManifest)
        isIndex = false;
    else if (root.contains("manifests"))
        isIndex = true;
    else if (root.contains("layers") || root.contains("config"))
        isIndex = false;
    else
        throw Error(ErrorKind::Schema, "unrecognized manifest: neither layers nor manifests present");

    if (isIndex) {
        doc.kind    = ManifestKind::MultiPlatformIndex;
        auto it     = root.find("manifests");
        if (it == root.end() || !it->is_array() || it->empty())
            throw Error(ErrorKind::Schema, "manifests missing/empty");
        std::size_t i = 0;
        for (const auto& m : *it) {
            std::string where = "manifests[" + std::to_string(i++) + "].";
            if (!m.is_object())
                throw Error(ErrorKind::Schema, where + " not an object");
            doc.unknownFieldCount += count_unknown(m, kDescKeys);
            PlatformEntry e;
            e.manifestDigest = require_string(m, "digest", where);
            e.size           = optional_size(m, where);
            if (auto p = m.find("platform"); p != m.end()) {
                if (!p->is_object())
                    throw Error(ErrorKind::Schema, where + "platform is not an object");
                doc.unknownFieldCount += count_unknown(*p, kPlatKeys);
                e.architecture = require_string(*p, "architecture", where + "platform.");
                e.os           = require_string(*p, "os", where + "platform.");
                e.variant      = p->value("variant", std::string{});
                if (auto f = p->find("features"); f != p->end()) {
                    if (!f->is_array())
                        throw Error(ErrorKind::Schema, where + "platform.features is not an array");
                    for (const auto& feat : *f)
                        if (feat.is_string())
                            e.features.push_back(feat.get<std::string>());
                }
            }
            doc.platformEntries.push_back(std::move(e));
        }
    } else {
        doc.kind = ManifestKind::SinglePlatform;
        auto it  = root.find("layers");
        if (it == root.end() || !it->is_array() || it->empty())
            throw Error(ErrorKind::Schema, "layers missing/empty");
        std::size_t i = 0;
        for (const auto& l : *it) {
            std::string where = "layers[" + std::to_string(i++) + "].";
            if (!l.is_object())
                throw Error(ErrorKind::Schema, where + " not an object");
            doc.unknownFieldCount += count_unknown(l, kDescKeys);
            LayerDescriptor d;
            d.digest       = require_string(l, "digest", where);
            d.byteSize     = optional_size(l, where);
            d.mediaTypeTag = layer_tag(l.value("mediaType", std::string{}));
            doc.layerDescriptors.push_back(std::move(d));
        }
        if (auto c = root.find("config"); c != root.end() && c->is_object())
            doc.configDigest = require_string(*c, "digest", "config.");
    }
    return doc;
}

std::string canonical_manifest_json(const ManifestDoc& doc)
{
    json j;
    j["kind"]      = doc.kind == ManifestKind::SinglePlatform ? "single-platform" : "multi-platform-index";
    j["mediaType"] = doc.mediaType;
    if (doc.kind == ManifestKind::MultiPlatformIndex) {
        j["platforms"] = json::array();
        for (const auto& e : doc.platformEntries)
            j["platforms"].push_back({{"architecture", e.architecture},
                                      {"os", e.os},
                                      {"variant", e.variant},
                                      {"features", e.features},
                                      {"digest", e.manifestDigest},
                                      {"size", e.size}});
    } else {
        j["layers"] = json::array();
        for (const auto& l : doc.layerDescriptors)
            j["layers"].push_back({{"digest", l.digest}, {"size", l.byteSize}, {"mediaType", l.mediaTypeTag}});
        if (doc.configDigest)
            j["config"] = *doc.configDigest;
    }
    return j.dump();
}

std::string semantic_digest(const ManifestDoc& doc)
{
    return sha256_digest(as_bytes(canonical_manifest_json(doc)));
}

const PlatformEntry& select_platform(const ManifestDoc& doc, const PlatformQuery& query)
{
    if (doc.kind != ManifestKind::MultiPlatformIndex)
        throw Error(ErrorKind::Schema, "select_platform requires a multi-platform index");

    std::vector<const PlatformEntry*> matches;
    for (const auto& e : doc.platformEntries)
        if (e.architecture == query.architecture && e.os == query.os)
            matches.push_back(&e);

    if (matches.empty()) {
        std::string avail;
        for (const auto& e : doc.platformEntries) {
            if (e.architecture.empty())
                continue;
            avail += (avail.empty() ? "" : ", ") + ("\"" + e.architecture + "/" + e.os + "\"");
        }
        throw Error(ErrorKind::NotFound, "architecture unavailable: " + query.architecture + "/" + query.os +
                                             "; available platforms: [" + avail + "]");
    }
    if (matches.size() > 1) {
        std::string digests;
        for (auto* m : matches)
            digests += (digests.empty() ? "" : ", ") + m->manifestDigest;
        throw Error(ErrorKind::Ambiguous, "ambiguous platform " + query.architecture + "/" + query.os +
                                              " matches " + std::to_string(matches.size()) +
                                              " entries: " + digests);
    }
    return *matches.front();
}

} // namespace hwdock
