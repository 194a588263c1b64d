#pragma once

// Shared test fixtures: deterministic procedural meshes and cloud builders.
// Oracle implementations live next to the suites that use them.

#include <array>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "satlas/core.hpp"
#include "satlas/mesh.hpp"
#include "satlas/point_cloud.hpp"

namespace satlas_test {

using satlas::PointCloud;
using satlas::Rng;
using satlas::TriangleMesh;
using satlas::Vec3;

/// Icosphere: regular icosahedron subdivided `subdiv` times, vertices on the
/// unit sphere. Face count = 20 * 4^subdiv (subdiv=2 -> 320).
inline TriangleMesh make_icosphere(int subdiv, double radius = 1.0) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi},  {0, 1, phi},
        {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1},  {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
    for (Vec3& v : verts) v = satlas::normalized(v);
    std::vector<std::array<int32_t, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    for (int s = 0; s < subdiv; ++s) {
        std::map<std::pair<int32_t, int32_t>, int32_t> midpoint;
        auto mid = [&](int32_t a, int32_t b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = satlas::normalized((verts[size_t(a)] + verts[size_t(b)]) * 0.5);
            verts.push_back(m);
            int32_t idx = int32_t(verts.size() - 1);
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int32_t, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            int32_t ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    TriangleMesh mesh;
    mesh.vertices = std::move(verts);
    if (radius != 1.0)
        for (Vec3& v : mesh.vertices) v *= radius;
    mesh.faces = std::move(faces);
    mesh.face_normals = satlas::compute_face_normals(mesh);
    return mesh;
}

/// Axis-aligned box [-h.x,h.x]x[-h.y,h.y]x[-h.z,h.z], each side an n x n
/// quad grid split into triangles (12*n^2 faces, sharp edges for ECD tests).
inline TriangleMesh make_box_mesh(int n, Vec3 half = {1, 1, 1}) {
    TriangleMesh mesh;
    auto add_side = [&](Vec3 origin, Vec3 du, Vec3 dv) {
        int32_t base = int32_t(mesh.vertices.size());
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j)
                mesh.vertices.push_back(origin + du * (double(i) / n) + dv * (double(j) / n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                int32_t a = base + int32_t(i * (n + 1) + j);
                int32_t b = a + int32_t(n + 1);
                mesh.faces.push_back({a, b, a + 1});
                mesh.faces.push_back({a + 1, b, b + 1});
            }
    };
    const double x = half.x, y = half.y, z = half.z;
    add_side({-x, -y, z}, {2 * x, 0, 0}, {0, 2 * y, 0});    // +z
    add_side({-x, y, -z}, {2 * x, 0, 0}, {0, -2 * y, 0});   // -z
    add_side({x, -y, -z}, {0, 2 * y, 0}, {0, 0, 2 * z});    // +x
    add_side({-x, y, -z}, {0, -2 * y, 0}, {0, 0, 2 * z});   // -x
    add_side({-x, y, -z}, {0, 0, 2 * z}, {2 * x, 0, 0});    // +y
    add_side({x, -y, -z}, {0, 0, 2 * z}, {-2 * x, 0, 0});   // -y
    mesh.face_normals = satlas::compute_face_normals(mesh);
    return mesh;
}

/// Torus around the z axis: big radius R, tube radius r.
inline TriangleMesh make_torus_mesh(int segments, int rings, double R = 1.0, double r = 0.35) {
    TriangleMesh mesh;
    for (int i = 0; i < segments; ++i) {
        double u = 2.0 * satlas::kPi * i / segments;
        for (int j = 0; j < rings; ++j) {
            double v = 2.0 * satlas::kPi * j / rings;
            mesh.vertices.push_back({(R + r * std::cos(v)) * std::cos(u),
                                     (R + r * std::cos(v)) * std::sin(u), r * std::sin(v)});
        }
    }
    auto vid = [&](int i, int j) { return int32_t(((i % segments) * rings) + (j % rings)); };
    for (int i = 0; i < segments; ++i)
        for (int j = 0; j < rings; ++j) {
            mesh.faces.push_back({vid(i, j), vid(i + 1, j), vid(i, j + 1)});
            mesh.faces.push_back({vid(i, j + 1), vid(i + 1, j), vid(i + 1, j + 1)});
        }
    mesh.face_normals = satlas::compute_face_normals(mesh);
    return mesh;
}

/// Random cloud with unit normals, points in a ball of the given radius.
inline PointCloud random_cloud(int n, uint64_t seed, double radius = 1.0) {
    Rng rng(seed);
    PointCloud cloud;
    for (int i = 0; i < n; ++i) {
        cloud.points.push_back(rng.unit_vector() * (radius * std::cbrt(rng.uniform())));
        cloud.normals.push_back(rng.unit_vector());
    }
    return cloud;
}

}  // namespace satlas_test
