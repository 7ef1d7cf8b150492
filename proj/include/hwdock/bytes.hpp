#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hwdock {

using Bytes    = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string_view as_string(ByteView b)
{
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

inline Bytes to_bytes(std::string_view s)
{
    auto v = as_bytes(s);
    return {v.begin(), v.end()};
}

std::string hex_encode(ByteView data);

/// Returns false on odd length or non-hex characters.
bool hex_decode(std::string_view hex, Bytes& out);

Bytes read_file(const std::string& path);
void  write_file(const std::string& path, ByteView data);

} // namespace hwdock
