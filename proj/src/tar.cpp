#include "hwdock/tar.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <map>

#include "hwdock/error.hpp"

namespace hwdock::tar {

namespace {

constexpr std::size_t kBlock = 512;

std::string field_string(const std::uint8_t* p, std::size_t n)
{
    auto end = std::find(p, p + n, 0);
    return std::string(reinterpret_cast<const char*>(p), reinterpret_cast<const char*>(end));
}

std::uint64_t field_number(const std::uint8_t* p, std::size_t n)
{
    if (n > 0 && (p[0] & 0x80) != 0) {
        // base-256, big-endian; the first byte's high bit is the marker
        std::uint64_t v = p[0] & 0x7F;
        for (std::size_t i = 1; i < n; ++i)
            v = (v << 8) | p[i];
        return v;
    }
    std::uint64_t v = 0;
    std::size_t   i = 0;
    while (i < n && (p[i] == ' ' || p[i] == 0))
        ++i;
    for (; i < n && p[i] >= '0' && p[i] <= '7'; ++i)
        v = v * 8 + (p[i] - '0');
    return v;
}

bool is_zero_block(const std::uint8_t* p)
{
    return std::all_of(p, p + kBlock, [](std::uint8_t b) { return b == 0; });
}

bool checksum_ok(const std::uint8_t* h)
{
    std::uint64_t stored   = field_number(h + 148, 8);
    std::uint64_t unsigned_sum = 0;
    std::int64_t  signed_sum   = 0;
    for (std::size_t i = 0; i < kBlock; ++i) {
        std::uint8_t b = (i >= 148 && i < 156) ? ' ' : h[i];
        unsigned_sum += b;
        signed_sum += static_cast<std::int8_t>(b);
    }
    return stored == unsigned_sum || static_cast<std::int64_t>(stored) == signed_sum;
}

std::uint64_t padded(std::uint64_t size)
{
    return (size + kBlock - 1) / kBlock * kBlock;
}

void parse_pax(std::string_view body, std::map<std::string, std::string>& out)
{
    while (!body.empty()) {
        auto sp = body.find(' ');
        if (sp == std::string_view::npos)
            throw Error(ErrorKind::Parse, "malformed pax record");
        std::size_t len = 0;
        auto [ptr, ec]  = std::from_chars(body.data(), body.data() + sp, len);
        if (ec != std::errc{} || len <= sp + 1 || len > body.size())
            throw Error(ErrorKind::Parse, "malformed pax record length");
        std::string_view rec = body.substr(sp + 1, len - sp - 1);
        if (!rec.empty() && rec.back() == '\n')
            rec.remove_suffix(1);
        auto eq = rec.find('=');
        if (eq != std::string_view::npos)
            out[std::string(rec.substr(0, eq))] = std::string(rec.substr(eq + 1));
        body.remove_prefix(len);
    }
}

} // namespace

void for_each_member(ByteView archive, const std::function<void(const Member&)>& visit)
{
    std::map<std::string, std::string> globalPax;
    std::map<std::string, std::string> localPax;
    std::optional<std::string>         gnuLongName;
    std::optional<std::string>         gnuLongLink;

    std::uint64_t pos = 0;
    while (pos + kBlock <= archive.size()) {
        const std::uint8_t* h = archive.data() + pos;
        if (is_zero_block(h))
            return;
        if (!checksum_ok(h))
            throw Error(ErrorKind::Parse, "tar header checksum mismatch at offset " + std::to_string(pos));

        char          typeflag = static_cast<char>(h[156]);
        std::uint64_t size     = field_number(h + 124, 12);
        std::uint64_t dataOff  = pos + kBlock;
        std::uint64_t next     = dataOff + padded(size);
        auto          body     = [&] {
            return std::string_view(reinterpret_cast<const char*>(archive.data() + dataOff),
                                    static_cast<std::size_t>(std::min<std::uint64_t>(size, archive.size() - dataOff)));
        };

        switch (typeflag) {
        case 'x':
            parse_pax(body(), localPax);
            pos = next;
            continue;
        case 'g':
            parse_pax(body(), globalPax);
            pos = next;
            continue;
        case 'L': {
            auto s = body();
            gnuLongName = std::string(s.substr(0, s.find('\0')));
            pos         = next;
            continue;
        }
        case 'K': {
            auto s = body();
            gnuLongLink = std::string(s.substr(0, s.find('\0')));
            pos         = next;
            continue;
        }
        case 'V':
            pos = next;
            continue;
        default: break;
        }

        Member m;
        std::string name   = field_string(h, 100);
        bool        ustar  = std::memcmp(h + 257, "ustar", 5) == 0;
        bool        gnu    = ustar && h[262] == ' ';
        if (ustar && !gnu) {
            std::string prefix = field_string(h + 345, 155);
            if (!prefix.empty())
                name = prefix + "/" + name;
        }
        m.path       = name;
        m.linkTarget = field_string(h + 157, 100);
        m.mode       = static_cast<std::uint32_t>(field_number(h + 100, 8));
        m.size       = size;
        m.devMajor   = static_cast<std::uint32_t>(field_number(h + 329, 8));
        m.devMinor   = static_cast<std::uint32_t>(field_number(h + 337, 8));

        auto pax = globalPax;
        for (auto& [k, v] : localPax)
            pax[k] = v;
        if (auto it = pax.find("path"); it != pax.end())
            m.path = it->second;
        if (auto it = pax.find("linkpath"); it != pax.end())
            m.linkTarget = it->second;
        if (auto it = pax.find("size"); it != pax.end()) {
            std::uint64_t s = 0;
            std::from_chars(it->second.data(), it->second.data() + it->second.size(), s);
            m.size = s;
            next   = dataOff + padded(s);
        }
        if (gnuLongName)
            m.path = *gnuLongName;
        if (gnuLongLink)
            m.linkTarget = *gnuLongLink;
        localPax.clear();
        gnuLongName.reset();
        gnuLongLink.reset();

        switch (typeflag) {
        case '0':
        case '\0':
        case '7': m.type = Type::Regular; break;
        case '1': m.type = Type::Hardlink; break;
        case '2': m.type = Type::Symlink; break;
        case '3': m.type = Type::CharDev; break;
        case '4': m.type = Type::BlockDev; break;
        case '5':
        case 'D': m.type = Type::Directory; break;
        case '6': m.type = Type::Fifo; break;
        default:
            throw Error(ErrorKind::Unsupported,
                        std::string("unsupported tar member type '") + typeflag + "' for " + m.path);
        }
        if (m.type == Type::Regular && m.path.ends_with('/') && m.size == 0)
            m.type = Type::Directory;
        switch (m.type) {
        case Type::Regular:
            if (dataOff + m.size > archive.size())
                throw Error(ErrorKind::Parse, "truncated tar member " + m.path);
            break;
        case Type::Directory: m.size = 0; break;
        default:
            // links, devices and fifos carry no data regardless of the size field
            m.size = 0;
            next   = dataOff;
            break;
        }
        m.dataOffset = dataOff;
        visit(m);
        pos = next;
    }
}

namespace {

void put_octal(std::uint8_t* p, std::size_t n, std::uint64_t v)
{
    // n-1 digits followed by NUL
    for (std::size_t i = n - 1; i-- > 0;) {
        p[i] = static_cast<std::uint8_t>('0' + (v & 7));
        v >>= 3;
    }
    p[n - 1] = 0;
}

void put_string(std::uint8_t* p, std::size_t n, std::string_view s)
{
    std::memcpy(p, s.data(), std::min(n, s.size()));
}

std::string pax_record(std::string_view key, std::string_view value)
{
    // length field counts itself
    std::size_t body = key.size() + value.size() + 3;
    std::size_t len  = body + std::to_string(body).size();
    if (std::to_string(len).size() != std::to_string(body).size())
        ++len;
    return std::to_string(len) + " " + std::string(key) + "=" + std::string(value) + "\n";
}

} // namespace

void Writer::write_header(const Member& m, char typeflag, std::string_view name)
{
    std::uint8_t h[kBlock] = {};
    put_string(h, 100, name);
    put_octal(h + 100, 8, m.mode);
    put_octal(h + 108, 8, 0);
    put_octal(h + 116, 8, 0);
    put_octal(h + 124, 12, m.size);
    put_octal(h + 136, 12, 0);
    h[156] = static_cast<std::uint8_t>(typeflag);
    put_string(h + 157, 100, m.linkTarget);
    std::memcpy(h + 257, "ustar", 6);
    std::memcpy(h + 263, "00", 2);
    put_octal(h + 329, 8, m.devMajor);
    put_octal(h + 337, 8, m.devMinor);
    std::memset(h + 148, ' ', 8);
    unsigned sum = 0;
    for (auto b : h)
        sum += b;
    put_octal(h + 148, 7, sum);
    h[155] = ' ';
    mOut.insert(mOut.end(), h, h + kBlock);
}

void Writer::add(const Member& m, ByteView content)
{
    if (mFinished)
        throw Error(ErrorKind::Io, "tar writer already finished");
    if (m.path.size() > 100 || m.linkTarget.size() > 100) {
        std::string records;
        if (m.path.size() > 100)
            records += pax_record("path", m.path);
        if (m.linkTarget.size() > 100)
            records += pax_record("linkpath", m.linkTarget);
        Member pax;
        pax.size = records.size();
        write_header(pax, 'x', "PaxHeader");
        mOut.insert(mOut.end(), records.begin(), records.end());
        mOut.resize(mOut.size() + (padded(records.size()) - records.size()), 0);
    }
    write_header(m, static_cast<char>(m.type), std::string_view(m.path).substr(0, 100));
    mOut.insert(mOut.end(), content.begin(), content.end());
    mOut.resize(mOut.size() + (padded(content.size()) - content.size()), 0);
}

namespace {
Member member(std::string path, Type type, std::uint32_t mode)
{
    Member m;
    m.path = std::move(path);
    m.type = type;
    m.mode = mode;
    return m;
}
} // namespace

void Writer::add_file(const std::string& path, ByteView content, std::uint32_t mode)
{
    Member m = member(path, Type::Regular, mode);
    m.size   = content.size();
    add(m, content);
}

void Writer::add_directory(const std::string& path, std::uint32_t mode)
{
    add(member(path.ends_with('/') ? path : path + "/", Type::Directory, mode), {});
}

void Writer::add_symlink(const std::string& path, const std::string& target)
{
    Member m     = member(path, Type::Symlink, 0777);
    m.linkTarget = target;
    add(m, {});
}

void Writer::add_hardlink(const std::string& path, const std::string& target)
{
    Member m     = member(path, Type::Hardlink, 0644);
    m.linkTarget = target;
    add(m, {});
}

void Writer::add_device(const std::string& path, Type type, std::uint32_t major, std::uint32_t minor)
{
    Member m   = member(path, type, 0666);
    m.devMajor = major;
    m.devMinor = minor;
    add(m, {});
}

void Writer::add_fifo(const std::string& path)
{
    add(member(path, Type::Fifo, 0644), {});
}

Bytes Writer::finish()
{
    if (!mFinished) {
        mOut.resize(mOut.size() + 2 * kBlock, 0);
        mFinished = true;
    }
    return mOut;
}

} // namespace hwdock::tar
