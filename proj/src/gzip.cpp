#include "hwdock/gzip.hpp"

#include <zlib.h>

#include "hwdock/error.hpp"

namespace hwdock {

Bytes gunzip(ByteView data)
{
    Bytes out;
    z_stream zs{};
    // 15 + 16: gzip wrapper only
    if (inflateInit2(&zs, 15 + 16) != Z_OK)
        throw Error(ErrorKind::Parse, "inflateInit failed");

    zs.next_in  = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    std::uint8_t chunk[64 * 1024];
    int          rc = Z_OK;
    for (;;) {
        zs.next_out  = chunk;
        zs.avail_out = sizeof(chunk);
        rc           = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw Error(ErrorKind::Parse, "corrupt gzip stream");
        }
        out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
        if (rc == Z_STREAM_END) {
            // concatenated members
            if (zs.avail_in >= 2 && zs.next_in[0] == 0x1F && zs.next_in[1] == 0x8B) {
                inflateReset(&zs);
                continue;
            }
            break;
        }
        if (zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw Error(ErrorKind::Parse, "truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

Bytes gzip(ByteView data, int level)
{
    z_stream zs{};
    if (deflateInit2(&zs, level, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw Error(ErrorKind::Io, "deflateInit failed");
    Bytes out(deflateBound(&zs, static_cast<uLong>(data.size())));
    zs.next_in   = const_cast<Bytef*>(data.data());
    zs.avail_in  = static_cast<uInt>(data.size());
    zs.next_out  = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc       = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END)
        throw Error(ErrorKind::Io, "deflate failed");
    out.resize(zs.total_out);
    return out;
}

Bytes maybe_gunzip(ByteView data)
{
    if (is_gzip(data))
        return gunzip(data);
    return Bytes(data.begin(), data.end());
}

} // namespace hwdock
