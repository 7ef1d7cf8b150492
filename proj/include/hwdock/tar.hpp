#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "bytes.hpp"

namespace hwdock::tar {

enum class Type : char {
    Regular   = '0',
    Hardlink  = '1',
    Symlink   = '2',
    CharDev   = '3',
    BlockDev  = '4',
    Directory = '5',
    Fifo      = '6',
};

/// One member as stored in the archive, after PAX / GNU long-name records
/// have been folded in. Path is the raw archive name (not normalized).
struct Member {
    std::string   path;
    Type          type = Type::Regular;
    std::uint64_t size = 0;
    std::uint32_t mode = 0644;
    std::string   linkTarget;
    std::uint32_t devMajor = 0;
    std::uint32_t devMinor = 0;
    /// Offset of the member's data inside the archive buffer.
    std::uint64_t dataOffset = 0;
};

/// Walks a USTAR/PAX/GNU tar buffer. Stops at the end-of-archive marker or
/// at the end of the buffer. Throws Error(Parse) on a corrupt header.
void for_each_member(ByteView archive, const std::function<void(const Member&)>& visit);

/// Minimal USTAR archive writer; long names and link targets are carried in
/// PAX extended headers.
class Writer {
public:
    void add_file(const std::string& path, ByteView content, std::uint32_t mode = 0644);
    void add_file(const std::string& path, std::string_view content, std::uint32_t mode = 0644)
    {
        add_file(path, as_bytes(content), mode);
    }
    void add_directory(const std::string& path, std::uint32_t mode = 0755);
    void add_symlink(const std::string& path, const std::string& target);
    void add_hardlink(const std::string& path, const std::string& target);
    void add_device(const std::string& path, Type type, std::uint32_t major, std::uint32_t minor);
    void add_fifo(const std::string& path);

    /// Appends the two zero blocks and returns the archive.
    Bytes finish();

private:
    void add(const Member& m, ByteView content);
    void write_header(const Member& m, char typeflag, std::string_view name);

    Bytes mOut;
    bool  mFinished = false;
};

} // namespace hwdock::tar
