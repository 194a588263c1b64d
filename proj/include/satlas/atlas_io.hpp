#pragma once

#include <cstring>
#include <filesystem>
#include <sstream>

#include "satlas/atlas.hpp"
#include "satlas/binary_io.hpp"
#include "satlas/core.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// SATL: the atlas container format. All integers little-endian.
//
//   offset 0  : magic "SATL"
//   offset 4  : u32 format version (1)
//   offset 8  : u32 height
//   offset 12 : u32 width
//   offset 16 : u32 channels
//   offset 20 : u32 dtype tag (0 = float32 little-endian)
//   offset 24 : 16-byte lattice id (point count u64 + construction hash u64)
//   offset 40 : payload, height*width*channels float32, row-major with
//               channels interleaved per pixel
//
// In-memory atlases are float64; this boundary is the only float32 cut.
// ---------------------------------------------------------------------------

inline constexpr uint32_t kAtlasFormatVersion = 1;
inline constexpr uint32_t kAtlasDtypeF32 = 0;

inline void write_atlas(const std::filesystem::path& path, const ShapeAtlas& atlas) {
    std::ostringstream os(std::ios::binary);
    os.write("SATL", 4);
    write_u32(os, kAtlasFormatVersion);
    write_u32(os, uint32_t(atlas.height));
    write_u32(os, uint32_t(atlas.width));
    write_u32(os, uint32_t(kAtlasChannels));
    write_u32(os, kAtlasDtypeF32);
    os.write(reinterpret_cast<const char*>(atlas.lattice_id.data()), 16);
    for (double v : atlas.data) write_f32(os, float(v));
    atomic_write_file(path, os.str());
}

inline ShapeAtlas read_atlas(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    char magic[4];
    read_bytes(is, magic, 4);
    if (std::memcmp(magic, "SATL", 4) != 0) throw FormatError("not an atlas file (bad magic)");
    uint32_t version = read_u32(is);
    if (version != kAtlasFormatVersion)
        throw FormatError("unsupported atlas format version " + std::to_string(version));
    uint32_t height = read_u32(is);
    uint32_t width = read_u32(is);
    uint32_t channels = read_u32(is);
    uint32_t dtype = read_u32(is);
    if (dtype != kAtlasDtypeF32)
        throw FormatError("unsupported atlas dtype tag " + std::to_string(dtype));
    if (channels != uint32_t(kAtlasChannels))
        throw FormatError("unexpected atlas channel count " + std::to_string(channels));
    if (height == 0 || width == 0 || height > (1u << 20) || width > (1u << 20))
        throw FormatError("implausible atlas dimensions");

    ShapeAtlas atlas;
    atlas.height = int(height);
    atlas.width = int(width);
    read_bytes(is, atlas.lattice_id.data(), 16);
    size_t count = size_t(height) * size_t(width) * channels;
    atlas.data.resize(count);
    for (size_t i = 0; i < count; ++i) atlas.data[i] = double(read_f32(is));
    // trailing bytes mean a corrupt or foreign file
    char extra;
    is.read(&extra, 1);
    if (is.gcount() != 0) throw FormatError("trailing bytes after atlas payload");
    return atlas;
}

}  // namespace satlas
