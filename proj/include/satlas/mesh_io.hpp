#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "satlas/binary_io.hpp"
#include "satlas/core.hpp"
#include "satlas/mesh.hpp"
#include "satlas/point_cloud.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Geometry file I/O.
//   read:  PLY (ascii / binary_little_endian) and OBJ; positions + faces,
//          per-vertex normals picked up when present.
//   write: PLY binary_little_endian (double precision) for point clouds and
//          triangle meshes.
// Malformed input throws FormatError.
// ---------------------------------------------------------------------------

namespace ply {

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

inline size_t scalar_size(Scalar s) {
    switch (s) {
        case Scalar::i8:
        case Scalar::u8: return 1;
        case Scalar::i16:
        case Scalar::u16: return 2;
        case Scalar::i32:
        case Scalar::u32:
        case Scalar::f32: return 4;
        case Scalar::f64: return 8;
    }
    return 0;
}

inline Scalar parse_scalar_type(const std::string& t) {
    if (t == "char" || t == "int8") return Scalar::i8;
    if (t == "uchar" || t == "uint8") return Scalar::u8;
    if (t == "short" || t == "int16") return Scalar::i16;
    if (t == "ushort" || t == "uint16") return Scalar::u16;
    if (t == "int" || t == "int32") return Scalar::i32;
    if (t == "uint" || t == "uint32") return Scalar::u32;
    if (t == "float" || t == "float32") return Scalar::f32;
    if (t == "double" || t == "float64") return Scalar::f64;
    throw FormatError("ply: unknown property type '" + t + "'");
}

struct Property {
    std::string name;
    bool is_list = false;
    Scalar count_type = Scalar::u8;  // lists only
    Scalar type = Scalar::f32;       // item type
};

struct Element {
    std::string name;
    size_t count = 0;
    std::vector<Property> props;
};

struct Header {
    bool binary = false;
    std::vector<Element> elements;
    size_t data_offset = 0;  // byte offset of the first payload byte
};

inline Header parse_header(const std::string& content) {
    Header h;
    size_t pos = 0;
    auto next_line = [&]() -> std::string {
        if (pos >= content.size()) throw FormatError("ply: truncated header");
        size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string line = content.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    if (next_line() != "ply") throw FormatError("ply: missing magic line");
    bool have_format = false;
    for (;;) {
        std::string line = next_line();
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "comment" || key == "obj_info" || key.empty()) continue;
        if (key == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt == "ascii")
                h.binary = false;
            else if (fmt == "binary_little_endian")
                h.binary = true;
            else
                throw FormatError("ply: unsupported format '" + fmt + "'");
            have_format = true;
        } else if (key == "element") {
            Element e;
            ls >> e.name >> e.count;
            if (ls.fail()) throw FormatError("ply: malformed element line");
            h.elements.push_back(std::move(e));
        } else if (key == "property") {
            if (h.elements.empty()) throw FormatError("ply: property before element");
            Property p;
            std::string t1;
            ls >> t1;
            if (t1 == "list") {
                std::string ct, it;
                ls >> ct >> it >> p.name;
                p.is_list = true;
                p.count_type = parse_scalar_type(ct);
                p.type = parse_scalar_type(it);
            } else {
                p.type = parse_scalar_type(t1);
                ls >> p.name;
            }
            if (ls.fail() || p.name.empty()) throw FormatError("ply: malformed property line");
            h.elements.back().props.push_back(std::move(p));
        } else if (key == "end_header") {
            break;
        } else {
            throw FormatError("ply: unknown header keyword '" + key + "'");
        }
    }
    if (!have_format) throw FormatError("ply: missing format line");
    h.data_offset = pos;
    return h;
}

/// Sequential value reader over the payload, covering both encodings.
class ValueReader {
public:
    ValueReader(const std::string& content, size_t offset, bool binary)
        : data_(content), pos_(offset), binary_(binary) {}

    double read(Scalar type) {
        if (binary_) return read_binary(type);
        return read_ascii();
    }

    size_t read_count(Scalar type) {
        double v = read(type);
        if (v < 0 || v > 1e9) throw FormatError("ply: implausible list count");
        return size_t(v);
    }

private:
    double read_binary(Scalar type) {
        size_t need = scalar_size(type);
        if (pos_ + need > data_.size()) throw FormatError("ply: truncated payload");
        const char* p = data_.data() + pos_;
        pos_ += need;
        auto load = [&]<class T>() {
            T v;
            std::memcpy(&v, p, sizeof(T));
            return double(v);
        };
        switch (type) {
            case Scalar::i8: return load.operator()<int8_t>();
            case Scalar::u8: return load.operator()<uint8_t>();
            case Scalar::i16: return load.operator()<int16_t>();
            case Scalar::u16: return load.operator()<uint16_t>();
            case Scalar::i32: return load.operator()<int32_t>();
            case Scalar::u32: return load.operator()<uint32_t>();
            case Scalar::f32: return load.operator()<float>();
            case Scalar::f64: return load.operator()<double>();
        }
        throw FormatError("ply: bad scalar type");
    }

    double read_ascii() {
        while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
        if (pos_ >= data_.size()) throw FormatError("ply: truncated ascii payload");
        size_t start = pos_;
        while (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(data_.data() + start, data_.data() + pos_, v);
        if (ec != std::errc{} || ptr != data_.data() + pos_)
            throw FormatError("ply: bad ascii number '" + data_.substr(start, pos_ - start) + "'");
        return v;
    }

    const std::string& data_;
    size_t pos_;
    bool binary_;
};

}  // namespace ply

struct LoadedGeometry {
    PointCloud cloud;      // vertex positions + normals when present
    TriangleMesh mesh;     // populated when the file carries faces
    bool has_faces = false;
};

inline LoadedGeometry read_ply(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    ply::Header header = ply::parse_header(content);
    ply::ValueReader reader(content, header.data_offset, header.binary);

    LoadedGeometry out;
    bool has_normals = false;
    std::vector<double> nx, ny, nz;

    for (const ply::Element& elem : header.elements) {
        if (elem.name == "vertex") {
            int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
            for (size_t p = 0; p < elem.props.size(); ++p) {
                const std::string& n = elem.props[p].name;
                if (n == "x") ix = int(p);
                else if (n == "y") iy = int(p);
                else if (n == "z") iz = int(p);
                else if (n == "nx") inx = int(p);
                else if (n == "ny") iny = int(p);
                else if (n == "nz") inz = int(p);
            }
            if (elem.count > 0 && (ix < 0 || iy < 0 || iz < 0))
                throw FormatError("ply: vertex element lacks x/y/z");
            has_normals = inx >= 0 && iny >= 0 && inz >= 0;
            out.cloud.points.reserve(elem.count);
            if (has_normals) out.cloud.normals.reserve(elem.count);
            std::vector<double> vals(elem.props.size());
            for (size_t i = 0; i < elem.count; ++i) {
                for (size_t p = 0; p < elem.props.size(); ++p) {
                    if (elem.props[p].is_list) {
                        size_t cnt = reader.read_count(elem.props[p].count_type);
                        for (size_t c = 0; c < cnt; ++c) reader.read(elem.props[p].type);
                        vals[p] = 0;
                    } else {
                        vals[p] = reader.read(elem.props[p].type);
                    }
                }
                out.cloud.points.push_back({vals[size_t(ix)], vals[size_t(iy)], vals[size_t(iz)]});
                if (has_normals)
                    out.cloud.normals.push_back(
                        {vals[size_t(inx)], vals[size_t(iny)], vals[size_t(inz)]});
            }
        } else if (elem.name == "face") {
            int list_prop = -1;
            for (size_t p = 0; p < elem.props.size(); ++p) {
                if (elem.props[p].is_list &&
                    (elem.props[p].name == "vertex_indices" || elem.props[p].name == "vertex_index"))
                    list_prop = int(p);
            }
            if (elem.count > 0 && list_prop < 0)
                throw FormatError("ply: face element lacks vertex_indices");
            out.mesh.faces.reserve(elem.count);
            std::vector<int64_t> poly;
            for (size_t i = 0; i < elem.count; ++i) {
                for (size_t p = 0; p < elem.props.size(); ++p) {
                    const ply::Property& prop = elem.props[p];
                    if (prop.is_list) {
                        size_t cnt = reader.read_count(prop.count_type);
                        if (int(p) == list_prop) {
                            poly.clear();
                            for (size_t c = 0; c < cnt; ++c) poly.push_back(int64_t(reader.read(prop.type)));
                        } else {
                            for (size_t c = 0; c < cnt; ++c) reader.read(prop.type);
                        }
                    } else {
                        reader.read(prop.type);
                    }
                }
                if (poly.size() < 3) throw FormatError("ply: face with fewer than 3 indices");
                for (size_t c = 1; c + 1 < poly.size(); ++c)
                    out.mesh.faces.push_back({int32_t(poly[0]), int32_t(poly[c]), int32_t(poly[c + 1])});
            }
            out.has_faces = elem.count > 0;
        } else {
            // unknown element: consume its payload
            for (size_t i = 0; i < elem.count; ++i) {
                for (const ply::Property& prop : elem.props) {
                    if (prop.is_list) {
                        size_t cnt = reader.read_count(prop.count_type);
                        for (size_t c = 0; c < cnt; ++c) reader.read(prop.type);
                    } else {
                        reader.read(prop.type);
                    }
                }
            }
        }
    }

    if (out.has_faces) {
        out.mesh.vertices = out.cloud.points;
        out.mesh.validate_indices();
    }
    return out;
}

inline LoadedGeometry read_obj(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path.string());
    LoadedGeometry out;
    std::vector<Vec3> vertex_normals;

    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z))
                throw FormatError("obj: bad vertex at line " + std::to_string(line_no));
            out.cloud.points.push_back(p);
        } else if (tag == "vn") {
            Vec3 n;
            if (!(ls >> n.x >> n.y >> n.z))
                throw FormatError("obj: bad normal at line " + std::to_string(line_no));
            vertex_normals.push_back(n);
        } else if (tag == "f") {
            std::vector<int64_t> poly;
            std::string corner;
            while (ls >> corner) {
                // forms: v, v/t, v//n, v/t/n — the leading index is the vertex
                size_t slash = corner.find('/');
                std::string idx_str = slash == std::string::npos ? corner : corner.substr(0, slash);
                int64_t idx = 0;
                auto [ptr, ec] = std::from_chars(idx_str.data(), idx_str.data() + idx_str.size(), idx);
                if (ec != std::errc{} || ptr != idx_str.data() + idx_str.size() || idx == 0)
                    throw FormatError("obj: bad face index at line " + std::to_string(line_no));
                if (idx < 0) idx = int64_t(out.cloud.points.size()) + idx + 1;
                poly.push_back(idx - 1);  // OBJ is 1-based
            }
            if (poly.size() < 3) throw FormatError("obj: face with fewer than 3 corners at line " +
                                                   std::to_string(line_no));
            for (size_t c = 1; c + 1 < poly.size(); ++c)
                out.mesh.faces.push_back({int32_t(poly[0]), int32_t(poly[c]), int32_t(poly[c + 1])});
            out.has_faces = true;
        }
        // vt / o / g / s / usemtl / mtllib ignored
    }

    if (!out.has_faces && vertex_normals.size() == out.cloud.points.size())
        out.cloud.normals = std::move(vertex_normals);
    if (out.has_faces) {
        out.mesh.vertices = out.cloud.points;
        out.mesh.validate_indices();
    }
    return out;
}

inline LoadedGeometry read_geometry(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (char& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".ply") return read_ply(path);
    if (ext == ".obj") return read_obj(path);
    throw FormatError("unsupported geometry format: " + path.string());
}

/// Reads a point cloud (vertex positions + normals when present); faces, if
/// any, are ignored.
inline PointCloud read_point_cloud(const std::filesystem::path& path) {
    LoadedGeometry g = read_geometry(path);
    if (g.cloud.empty()) throw FormatError("no points in " + path.string());
    return std::move(g.cloud);
}

/// Reads a triangle mesh; degenerate faces are dropped and face normals
/// derived. Throws when the file has no faces.
inline TriangleMesh read_mesh(const std::filesystem::path& path) {
    LoadedGeometry g = read_geometry(path);
    if (!g.has_faces || g.mesh.faces.empty()) throw EmptyMesh("no faces in " + path.string());
    drop_degenerate_faces(g.mesh);
    if (g.mesh.faces.empty()) throw EmptyMesh("all faces degenerate in " + path.string());
    return std::move(g.mesh);
}

/// Binary little-endian PLY, double-precision properties.
inline void write_point_cloud_ply(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ostringstream os(std::ios::binary);
    os << "ply\nformat binary_little_endian 1.0\n";
    os << "element vertex " << cloud.size() << "\n";
    os << "property double x\nproperty double y\nproperty double z\n";
    if (cloud.has_normals())
        os << "property double nx\nproperty double ny\nproperty double nz\n";
    os << "end_header\n";
    for (size_t i = 0; i < cloud.size(); ++i) {
        write_value(os, cloud.points[i].x);
        write_value(os, cloud.points[i].y);
        write_value(os, cloud.points[i].z);
        if (cloud.has_normals()) {
            write_value(os, cloud.normals[i].x);
            write_value(os, cloud.normals[i].y);
            write_value(os, cloud.normals[i].z);
        }
    }
    atomic_write_file(path, os.str());
}

inline void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh) {
    std::ostringstream os(std::ios::binary);
    os << "ply\nformat binary_little_endian 1.0\n";
    os << "element vertex " << mesh.vertices.size() << "\n";
    os << "property double x\nproperty double y\nproperty double z\n";
    os << "element face " << mesh.faces.size() << "\n";
    os << "property list uchar int vertex_indices\n";
    os << "end_header\n";
    for (const Vec3& v : mesh.vertices) {
        write_value(os, v.x);
        write_value(os, v.y);
        write_value(os, v.z);
    }
    for (const auto& f : mesh.faces) {
        write_value(os, uint8_t(3));
        write_value(os, f[0]);
        write_value(os, f[1]);
        write_value(os, f[2]);
    }
    atomic_write_file(path, os.str());
}

}  // namespace satlas
