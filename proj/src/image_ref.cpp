#include "hwdock/image_ref.hpp"

#include <algorithm>

#include "hwdock/digest.hpp"
#include "hwdock/error.hpp"

namespace hwdock {

namespace {

bool is_registry_host(std::string_view segment)
{
    return segment.find('.') != std::string_view::npos || segment.find(':') != std::string_view::npos ||
           segment == "localhost";
}

bool valid_repository(std::string_view repo)
{
    if (repo.empty() || repo.front() == '/' || repo.back() == '/' || repo.find("//") != std::string_view::npos)
        return false;
    return std::all_of(repo.begin(), repo.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-' || c == '/';
    });
}

bool valid_tag(std::string_view tag)
{
    if (tag.empty() || tag.size() > 128 || tag.front() == '.' || tag.front() == '-')
        return false;
    return std::all_of(tag.begin(), tag.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_' ||
               c == '-';
    });
}

} // namespace

std::string ImageRef::to_string() const
{
    std::string out = registry + "/" + repository;
    if (digest)
        out += "@" + *digest;
    else if (tag)
        out += ":" + *tag;
    return out;
}

ImageRef resolve_ref(std::string_view text)
{
    if (text.empty())
        throw Error(ErrorKind::Parse, "empty reference");

    ImageRef ref;
    std::string_view rest = text;

    if (auto at = rest.find('@'); at != std::string_view::npos) {
        auto digest = rest.substr(at + 1);
        if (!is_valid_digest(digest))
            throw Error(ErrorKind::Parse, "invalid digest in reference: " + std::string(digest));
        ref.digest = std::string(digest);
        rest       = rest.substr(0, at);
    }

    auto slash = rest.find('/');
    if (slash != std::string_view::npos && is_registry_host(rest.substr(0, slash))) {
        ref.registry = std::string(rest.substr(0, slash));
        rest         = rest.substr(slash + 1);
    } else {
        ref.registry = std::string(kOfficialRegistry);
    }
    if (ref.registry == "docker.io" || ref.registry == "index.docker.io")
        ref.registry = std::string(kOfficialRegistry);

    auto lastSlash = rest.rfind('/');
    auto colon     = rest.rfind(':');
    if (colon != std::string_view::npos && (lastSlash == std::string_view::npos || colon > lastSlash)) {
        if (ref.digest)
            throw Error(ErrorKind::Parse, "reference carries both a tag and a digest: " + std::string(text));
        auto tag = rest.substr(colon + 1);
        if (!valid_tag(tag))
            throw Error(ErrorKind::Parse, "invalid tag: " + std::string(tag));
        ref.tag = std::string(tag);
        rest    = rest.substr(0, colon);
    }

    if (rest.empty())
        throw Error(ErrorKind::Parse, "empty repository in reference: " + std::string(text));
    if (!valid_repository(rest))
        throw Error(ErrorKind::Parse, "invalid repository name: " + std::string(rest));

    ref.repository = std::string(rest);
    if (ref.registry == kOfficialRegistry && ref.repository.find('/') == std::string::npos)
        ref.repository = "library/" + ref.repository;
    if (!ref.tag && !ref.digest)
        ref.tag = "latest";
    return ref;
}

} // namespace hwdock
