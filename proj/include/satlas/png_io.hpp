#pragma once

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <sstream>
#include <vector>

#include "satlas/atlas.hpp"
#include "satlas/binary_io.hpp"
#include "satlas/core.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Minimal PNG writer (8-bit RGBA, zlib-deflated, filter 0) for diagnostic
// previews. Previews are for eyeballs only; the SATL format is the data path.
// ---------------------------------------------------------------------------

namespace detail {

inline void png_write_be32(std::string& out, uint32_t v) {
    out.push_back(char((v >> 24) & 0xff));
    out.push_back(char((v >> 16) & 0xff));
    out.push_back(char((v >> 8) & 0xff));
    out.push_back(char(v & 0xff));
}

inline void png_chunk(std::string& out, const char type[4], const std::string& payload) {
    png_write_be32(out, uint32_t(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    uint32_t crc = uint32_t(::crc32(0L, reinterpret_cast<const Bytef*>(body.data()), uInt(body.size())));
    png_write_be32(out, crc);
}

}  // namespace detail

/// Writes an 8-bit RGBA PNG. `rgba` is row-major, 4 bytes per pixel.
inline void write_png_rgba(const std::filesystem::path& path, int width, int height,
                           const std::vector<uint8_t>& rgba) {
    if (width < 1 || height < 1 || rgba.size() != size_t(width) * size_t(height) * 4)
        throw Error("write_png_rgba: buffer size does not match dimensions");

    // raw scanlines, each prefixed with filter byte 0
    std::vector<uint8_t> raw;
    raw.reserve(size_t(height) * (size_t(width) * 4 + 1));
    for (int r = 0; r < height; ++r) {
        raw.push_back(0);
        const uint8_t* row = rgba.data() + size_t(r) * size_t(width) * 4;
        raw.insert(raw.end(), row, row + size_t(width) * 4);
    }

    uLongf comp_len = ::compressBound(uLong(raw.size()));
    std::vector<uint8_t> comp(comp_len);
    if (::compress2(comp.data(), &comp_len, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw Error("png: deflate failed");
    comp.resize(comp_len);

    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    detail::png_write_be32(ihdr, uint32_t(width));
    detail::png_write_be32(ihdr, uint32_t(height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(6);   // color type RGBA
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // interlace
    detail::png_chunk(out, "IHDR", ihdr);
    detail::png_chunk(out, "IDAT", std::string(reinterpret_cast<const char*>(comp.data()), comp.size()));
    detail::png_chunk(out, "IEND", {});
    atomic_write_file(path, out);
}

/// Preview mapping: offset channels affinely [-1,1] -> [0,255] as RGB, mask
/// as alpha (opaque where directly assigned).
inline std::vector<uint8_t> render_atlas_preview(const ShapeAtlas& atlas) {
    std::vector<uint8_t> rgba(atlas.pixel_count() * 4);
    auto to_byte = [](double v) {
        double scaled = (v + 1.0) / 2.0 * 255.0;
        return uint8_t(std::min(255.0, std::max(0.0, std::round(scaled))));
    };
    for (size_t px = 0; px < atlas.pixel_count(); ++px) {
        const double* v = &atlas.data[px * kAtlasChannels];
        rgba[px * 4 + 0] = to_byte(v[kChOffsetX]);
        rgba[px * 4 + 1] = to_byte(v[kChOffsetY]);
        rgba[px * 4 + 2] = to_byte(v[kChOffsetZ]);
        rgba[px * 4 + 3] = v[kChMask] > 0.5 ? 255 : 128;
    }
    return rgba;
}

inline void write_atlas_preview_png(const std::filesystem::path& path, const ShapeAtlas& atlas) {
    write_png_rgba(path, atlas.width, atlas.height, render_atlas_preview(atlas));
}

/// False-color face-id buffer for rasterizer debugging (id hashed to RGB;
/// background transparent black).
inline void write_face_id_png(const std::filesystem::path& path, int width, int height,
                              const std::vector<int32_t>& face_ids) {
    std::vector<uint8_t> rgba(size_t(width) * size_t(height) * 4, 0);
    for (size_t px = 0; px < face_ids.size(); ++px) {
        int32_t id = face_ids[px];
        if (id < 0) continue;
        uint64_t h = mix_seed({uint64_t(id), fnv1a64("face-id-color")});
        rgba[px * 4 + 0] = uint8_t(h & 0xff);
        rgba[px * 4 + 1] = uint8_t((h >> 8) & 0xff);
        rgba[px * 4 + 2] = uint8_t((h >> 16) & 0xff);
        rgba[px * 4 + 3] = 255;
    }
    write_png_rgba(path, width, height, rgba);
}

}  // namespace satlas
