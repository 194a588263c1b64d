#pragma once

#include <array>
#include <vector>

#include "satlas/core.hpp"
#include "satlas/point_cloud.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Triangle meshes: storage, derived face normals, and area-weighted surface
// sampling. Faces keep right-hand winding; flat face normals are the only
// normals the pipeline relies on.
// ---------------------------------------------------------------------------

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int32_t, 3>> faces;
    std::vector<Vec3> face_normals;  // unit, right-hand winding; see compute_face_normals

    size_t vertex_count() const { return vertices.size(); }
    size_t face_count() const { return faces.size(); }
    bool empty() const { return faces.empty(); }

    const Vec3& vert(int face, int corner) const {
        return vertices[size_t(faces[size_t(face)][size_t(corner)])];
    }

    void validate_indices() const {
        const int32_t n = int32_t(vertices.size());
        for (const auto& f : faces)
            for (int32_t idx : f)
                if (idx < 0 || idx >= n) throw Error("face index out of range");
    }
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

constexpr double kDegenerateFaceArea = 1e-12;

/// Unit normal per face from the winding order. Throws on any face whose area
/// falls below the degeneracy threshold (such faces should have been filtered
/// at load time).
inline std::vector<Vec3> compute_face_normals(const TriangleMesh& mesh) {
    std::vector<Vec3> normals;
    normals.reserve(mesh.faces.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const Vec3& v0 = mesh.vert(int(f), 0);
        const Vec3& v1 = mesh.vert(int(f), 1);
        const Vec3& v2 = mesh.vert(int(f), 2);
        Vec3 n = cross(v1 - v0, v2 - v0);
        double len = norm(n);
        if (0.5 * len < kDegenerateFaceArea)
            throw DegenerateFace("face " + std::to_string(f) + " has near-zero area");
        normals.push_back(n / len);
    }
    return normals;
}

/// Removes faces below the area threshold, returning how many were dropped,
/// and (re)derives face normals for the survivors.
inline size_t drop_degenerate_faces(TriangleMesh& mesh, double min_area = kDegenerateFaceArea) {
    size_t kept = 0, dropped = 0;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        double area = triangle_area(mesh.vertices[size_t(tri[0])], mesh.vertices[size_t(tri[1])],
                                    mesh.vertices[size_t(tri[2])]);
        if (area < min_area) {
            ++dropped;
            continue;
        }
        mesh.faces[kept++] = tri;
    }
    mesh.faces.resize(kept);
    mesh.face_normals = mesh.faces.empty() ? std::vector<Vec3>{} : compute_face_normals(mesh);
    return dropped;
}

inline std::vector<double> face_areas(const TriangleMesh& mesh) {
    std::vector<double> areas;
    areas.reserve(mesh.faces.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f)
        areas.push_back(triangle_area(mesh.vert(int(f), 0), mesh.vert(int(f), 1), mesh.vert(int(f), 2)));
    return areas;
}

inline Vec3 vertex_centroid(const TriangleMesh& mesh) {
    if (mesh.vertices.empty()) throw EmptyMesh("mesh has no vertices");
    Vec3 c{0, 0, 0};
    for (const Vec3& v : mesh.vertices) c = c + v;
    return c / double(mesh.vertices.size());
}

namespace detail {

/// Cumulative-area table supporting O(log F) face selection by area weight.
struct AreaSampler {
    std::vector<double> cumulative;  // strictly increasing, ends at total area

    explicit AreaSampler(const TriangleMesh& mesh) {
        cumulative.reserve(mesh.faces.size());
        double acc = 0.0;
        for (double a : face_areas(mesh)) {
            acc += a;
            cumulative.push_back(acc);
        }
        if (cumulative.empty() || cumulative.back() <= 0.0)
            throw EmptyMesh("mesh has no sampleable area");
    }

    int pick(double unit_u) const {
        double needle = unit_u * cumulative.back();
        auto it = std::lower_bound(cumulative.begin(), cumulative.end(), needle);
        if (it == cumulative.end()) --it;
        return int(it - cumulative.begin());
    }
};

}  // namespace detail

/// `count` points drawn area-uniformly over the surface; each sample carries
/// its face's flat normal. Deterministic for a fixed (mesh, count, seed).
/// Barycentric coordinates use the sqrt transform for uniformity within a
/// face.
inline PointCloud sample_surface(const TriangleMesh& mesh, int count, uint64_t seed) {
    if (mesh.empty()) throw EmptyMesh("sample_surface needs at least one face");
    if (count < 1) throw Error("sample_surface: count must be positive");
    const std::vector<Vec3> normals =
        mesh.face_normals.size() == mesh.faces.size() ? mesh.face_normals : compute_face_normals(mesh);

    detail::AreaSampler sampler(mesh);
    Rng rng(mix_seed({seed, fnv1a64("sample_surface")}));
    PointCloud cloud;
    cloud.points.reserve(size_t(count));
    cloud.normals.reserve(size_t(count));
    for (int i = 0; i < count; ++i) {
        int f = sampler.pick(rng.uniform());
        double su = std::sqrt(rng.uniform());
        double v = rng.uniform();
        double b0 = 1.0 - su, b1 = su * (1.0 - v), b2 = su * v;
        const Vec3& p0 = mesh.vert(f, 0);
        const Vec3& p1 = mesh.vert(f, 1);
        const Vec3& p2 = mesh.vert(f, 2);
        cloud.points.push_back(p0 * b0 + p1 * b1 + p2 * b2);
        cloud.normals.push_back(normals[size_t(f)]);
    }
    return cloud;
}

/// Applies a normalization (translate then scale) to every vertex.
inline TriangleMesh transformed(const TriangleMesh& mesh, const NormalizationTransform& t) {
    TriangleMesh out = mesh;
    for (Vec3& v : out.vertices) v = t.apply(v);
    // pure translation+scale with positive scale preserves unit normals
    return out;
}

}  // namespace satlas
