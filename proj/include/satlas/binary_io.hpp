#pragma once

#include <unistd.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "satlas/core.hpp"

namespace satlas {

// Little-endian binary stream helpers shared by the atlas, permutation-cache,
// mesh, and image writers. All formats in this project are little-endian.

static_assert(std::endian::native == std::endian::little,
              "big-endian hosts would need byte swaps in binary_io");

inline void write_bytes(std::ostream& os, const void* data, size_t size) {
    os.write(static_cast<const char*>(data), std::streamsize(size));
    if (!os) throw FormatError("write failed");
}

inline void read_bytes(std::istream& is, void* data, size_t size) {
    is.read(static_cast<char*>(data), std::streamsize(size));
    if (size_t(is.gcount()) != size) throw FormatError("unexpected end of file");
}

template <class T>
    requires std::is_trivially_copyable_v<T>
void write_value(std::ostream& os, const T& v) {
    write_bytes(os, &v, sizeof(T));
}

template <class T>
    requires std::is_trivially_copyable_v<T>
T read_value(std::istream& is) {
    T v;
    read_bytes(is, &v, sizeof(T));
    return v;
}

inline void write_u32(std::ostream& os, uint32_t v) { write_value(os, v); }
inline void write_u64(std::ostream& os, uint64_t v) { write_value(os, v); }
inline void write_f32(std::ostream& os, float v) { write_value(os, v); }
inline uint32_t read_u32(std::istream& is) { return read_value<uint32_t>(is); }
inline uint64_t read_u64(std::istream& is) { return read_value<uint64_t>(is); }
inline float read_f32(std::istream& is) { return read_value<float>(is); }

/// Writes `content` to `path` atomically: a unique sibling temp file is
/// written, flushed, then renamed over the target. Concurrent writers of the
/// same content cannot leave a torn file behind.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(uint64_t(::getpid()));
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw FormatError("cannot open " + tmp.string() + " for writing");
        os.write(content.data(), std::streamsize(content.size()));
        os.flush();
        if (!os) throw FormatError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw FormatError("rename failed: " + path.string() + ": " + ec.message());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return content;
}

}  // namespace satlas
