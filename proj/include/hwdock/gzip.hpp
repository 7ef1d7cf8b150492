#pragma once

#include "bytes.hpp"

namespace hwdock {

inline bool is_gzip(ByteView data)
{
    return data.size() >= 2 && data[0] == 0x1F && data[1] == 0x8B;
}

/// Inflates every concatenated gzip member.
Bytes gunzip(ByteView data);
Bytes gzip(ByteView data, int level = 6);

/// gunzip() when the magic bytes say so, otherwise a copy.
Bytes maybe_gunzip(ByteView data);

} // namespace hwdock
