#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "bytes.hpp"

namespace hwdock {

/// Content address in "sha256:<64 lowercase hex>" form.
std::string sha256_digest(ByteView data);

bool is_valid_digest(std::string_view digest);

/// Hex part of a valid digest.
std::string_view digest_hex(std::string_view digest);

class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&)            = delete;
    Sha256& operator=(const Sha256&) = delete;

    void        update(ByteView data);
    std::string finish();

private:
    struct Impl;
    std::unique_ptr<Impl> mImpl;
};

} // namespace hwdock
