#include "hwdock/digest.hpp"

#include <openssl/evp.h>

#include "hwdock/error.hpp"

namespace hwdock {

struct Sha256::Impl {
    EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256()
    : mImpl(std::make_unique<Impl>())
{
    mImpl->ctx = EVP_MD_CTX_new();
    if (mImpl->ctx == nullptr || EVP_DigestInit_ex(mImpl->ctx, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::Unsupported, "sha256 unavailable");
}

Sha256::~Sha256()
{
    EVP_MD_CTX_free(mImpl->ctx);
}

void Sha256::update(ByteView data)
{
    EVP_DigestUpdate(mImpl->ctx, data.data(), data.size());
}

std::string Sha256::finish()
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int  len = 0;
    EVP_DigestFinal_ex(mImpl->ctx, md, &len);
    return "sha256:" + hex_encode({md, len});
}

std::string sha256_digest(ByteView data)
{
    Sha256 h;
    h.update(data);
    return h.finish();
}

bool is_valid_digest(std::string_view digest)
{
    constexpr std::string_view prefix = "sha256:";
    if (!digest.starts_with(prefix) || digest.size() != prefix.size() + 64)
        return false;
    for (char c : digest.substr(prefix.size()))
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')))
            return false;
    return true;
}

std::string_view digest_hex(std::string_view digest)
{
    auto pos = digest.find(':');
    return pos == std::string_view::npos ? digest : digest.substr(pos + 1);
}

} // namespace hwdock
