#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "satlas/assignment.hpp"
#include "satlas/core.hpp"
#include "satlas/kdtree.hpp"
#include "satlas/point_cloud.hpp"
#include "satlas/sphere_lattice.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Shape Atlas construction and inversion.
//
// A point cloud becomes a dense grid_side x grid_side image with 8 channels:
// the offset of each point from its assigned sphere-lattice point, the point
// normal, a mask separating directly assigned pixels from propagated ones,
// and a constant-zero channel kept for training-stack compatibility.
// Assignment is minimum-cost matching under squared Euclidean distance;
// pixels are laid out by the lattice's one-time plane permutation.
// ---------------------------------------------------------------------------

enum AtlasChannel : int {
    kChOffsetX = 0,
    kChOffsetY = 1,
    kChOffsetZ = 2,
    kChNormalX = 3,
    kChNormalY = 4,
    kChNormalZ = 5,
    kChMask = 6,
    kChDummy = 7,
};
constexpr int kAtlasChannels = 8;

struct ShapeAtlas {
    int height = 0, width = 0;
    std::array<uint8_t, 16> lattice_id{};
    std::string source_id;                 // free-form label for where the data came from
    std::vector<double> data;              // (row * width + col) * channels + ch

    void resize(int h, int w) {
        height = h;
        width = w;
        data.assign(size_t(h) * size_t(w) * kAtlasChannels, 0.0);
    }

    size_t pixel_count() const { return size_t(height) * size_t(width); }

    double at(int row, int col, int ch) const {
        return data[(size_t(row) * size_t(width) + size_t(col)) * kAtlasChannels + size_t(ch)];
    }
    double& at(int row, int col, int ch) {
        return data[(size_t(row) * size_t(width) + size_t(col)) * kAtlasChannels + size_t(ch)];
    }
    double at_cell(int cell, int ch) const { return data[size_t(cell) * kAtlasChannels + size_t(ch)]; }
    double& at_cell(int cell, int ch) { return data[size_t(cell) * kAtlasChannels + size_t(ch)]; }

    double mask_sum() const {
        double s = 0.0;
        for (size_t px = 0; px < pixel_count(); ++px) s += data[px * kAtlasChannels + kChMask];
        return s;
    }

    /// Checks structural invariants: mask strictly 0/1, dummy channel zero,
    /// all entries finite, and normals unit-length (to 1e-3) wherever a
    /// nonzero normal is stored.
    void validate() const {
        if (size_t(height) * size_t(width) * kAtlasChannels != data.size())
            throw ShapeMismatch("atlas data size does not match dimensions");
        for (size_t px = 0; px < pixel_count(); ++px) {
            const double* v = &data[px * kAtlasChannels];
            for (int ch = 0; ch < kAtlasChannels; ++ch)
                if (!std::isfinite(v[ch])) throw Error("atlas contains non-finite value");
            if (v[kChMask] != 0.0 && v[kChMask] != 1.0)
                throw Error("atlas mask is not exactly 0 or 1");
            if (v[kChDummy] != 0.0) throw Error("atlas dummy channel is not zero");
            double nn = std::sqrt(v[kChNormalX] * v[kChNormalX] + v[kChNormalY] * v[kChNormalY] +
                                  v[kChNormalZ] * v[kChNormalZ]);
            if (nn > 1e-9 && std::abs(nn - 1.0) > 1e-3)
                throw Error("atlas normal is neither zero nor unit");
        }
    }
};

struct AtlasPair {
    ShapeAtlas complete;
    ShapeAtlas incomplete;

    void validate() const {
        if (complete.height != incomplete.height || complete.width != incomplete.width)
            throw ShapeMismatch("atlas pair dimensions differ");
        if (complete.lattice_id != incomplete.lattice_id)
            throw ShapeMismatch("atlas pair lattice ids differ");
    }
};

namespace detail {

/// Exact-duplicate points make the assignment cost landscape degenerate
/// (many zero-cost ties slow the solver down badly). Every repeat of an
/// already-seen position is nudged by a deterministic ~1e-9 jitter before
/// assignment; stored channel values always use the original coordinates, so
/// round-trips are unaffected.
inline std::vector<Vec3> jitter_duplicates(const std::vector<Vec3>& points, uint64_t seed) {
    struct KeyHash {
        size_t operator()(const std::array<uint64_t, 3>& k) const {
            uint64_t h = mix_seed({k[0], k[1], k[2]});
            return size_t(h);
        }
    };
    std::unordered_map<std::array<uint64_t, 3>, int, KeyHash> seen;
    seen.reserve(points.size());
    std::vector<Vec3> out = points;
    for (size_t i = 0; i < points.size(); ++i) {
        std::array<uint64_t, 3> key;
        std::memcpy(key.data(), &points[i].x, 24);
        int& count = seen[key];
        if (count > 0) {
            Rng rng(mix_seed({seed, uint64_t(i), fnv1a64("dup-jitter")}));
            out[i] += rng.unit_vector() * 1e-9;
        }
        ++count;
    }
    return out;
}

constexpr uint64_t kCompleteJitterSeed = 0x73686170656174ULL;

}  // namespace detail

/// Default candidate counts for sphere offsetting (k-NN sparsified
/// assignment with doubling escalation).
constexpr int kSphereOffsetK0 = 50;
constexpr int kSphereOffsetKMax = 400;

/// Stratified stride over the Fibonacci index order: indices floor(m*N/N_in)
/// for m = 0..N_in-1. Strictly increasing, so indices are distinct, and the
/// spiral ordering makes the subset near-uniform over the sphere.
inline std::vector<int32_t> stratified_sphere_subsample(int n_total, int n_in) {
    std::vector<int32_t> idx(static_cast<size_t>(n_in));
    for (int m = 0; m < n_in; ++m)
        idx[size_t(m)] = int32_t((int64_t(m) * int64_t(n_total)) / int64_t(n_in));
    return idx;
}

/// Complete cloud of exactly N points -> full atlas (every pixel mask=1).
inline ShapeAtlas build_complete_atlas(const PointCloud& cloud, const SphereLattice& lattice,
                                       std::string source_id = {}) {
    if (cloud.empty()) throw EmptyCloud("build_complete_atlas: empty cloud");
    if (int(cloud.size()) != lattice.n)
        throw SizeMismatch("build_complete_atlas: cloud size " + std::to_string(cloud.size()) +
                           " != lattice size " + std::to_string(lattice.n));
    if (!cloud.has_normals()) throw MissingNormals("build_complete_atlas: cloud has no normals");

    std::vector<Vec3> assign_points = detail::jitter_duplicates(cloud.points, detail::kCompleteJitterSeed);
    AssignmentResult assignment =
        escalate_and_solve(std::span<const Vec3>(assign_points),
                           std::span<const Vec3>(lattice.sphere_points), kSphereOffsetK0,
                           kSphereOffsetKMax);

    ShapeAtlas atlas;
    atlas.resize(lattice.grid_side, lattice.grid_side);
    atlas.lattice_id = lattice.id;
    atlas.source_id = std::move(source_id);
    for (int i = 0; i < lattice.n; ++i) {
        int sphere_idx = assignment.row_to_col[size_t(i)];
        int cell = lattice.cell_of(sphere_idx);
        const Vec3 offset = cloud.points[size_t(i)] - lattice.sphere_points[size_t(sphere_idx)];
        const Vec3& n = cloud.normals[size_t(i)];
        double* v = &atlas.data[size_t(cell) * kAtlasChannels];
        v[kChOffsetX] = offset.x;
        v[kChOffsetY] = offset.y;
        v[kChOffsetZ] = offset.z;
        v[kChNormalX] = n.x;
        v[kChNormalY] = n.y;
        v[kChNormalZ] = n.z;
        v[kChMask] = 1.0;
        v[kChDummy] = 0.0;
    }
    return atlas;
}

/// Partial cloud of N_in <= N points -> full atlas. The cloud is assigned to
/// a stratified N_in-point subset of the sphere lattice; every remaining
/// sphere point copies the full channel vector (offset and normal) of its
/// nearest assigned sphere point, with mask=0 marking the propagated pixels.
inline ShapeAtlas build_partial_atlas(const PointCloud& partial, const SphereLattice& lattice,
                                      uint64_t seed, std::string source_id = {}) {
    if (partial.empty()) throw EmptyCloud("build_partial_atlas: empty cloud");
    const int n_in = int(partial.size());
    if (n_in > lattice.n)
        throw SizeMismatch("build_partial_atlas: more input points than lattice points");
    if (!partial.has_normals()) throw MissingNormals("build_partial_atlas: cloud has no normals");

    const std::vector<int32_t> sub = stratified_sphere_subsample(lattice.n, n_in);
    std::vector<Vec3> sub_points(static_cast<size_t>(n_in));
    for (int m = 0; m < n_in; ++m) sub_points[size_t(m)] = lattice.sphere_points[size_t(sub[size_t(m)])];

    std::vector<Vec3> assign_points = detail::jitter_duplicates(partial.points, seed);
    AssignmentResult assignment =
        escalate_and_solve(std::span<const Vec3>(assign_points), std::span<const Vec3>(sub_points),
                           kSphereOffsetK0, kSphereOffsetKMax);

    // channel values per sphere lattice index, filled for assigned indices
    std::vector<int32_t> assigned_sphere(static_cast<size_t>(n_in));
    std::vector<std::array<double, kAtlasChannels>> values(size_t(lattice.n));
    std::vector<char> is_assigned(size_t(lattice.n), 0);
    std::vector<Vec3> assigned_positions(static_cast<size_t>(n_in));
    for (int i = 0; i < n_in; ++i) {
        int sphere_idx = sub[size_t(assignment.row_to_col[size_t(i)])];
        assigned_sphere[size_t(i)] = sphere_idx;
        assigned_positions[size_t(i)] = lattice.sphere_points[size_t(sphere_idx)];
        const Vec3 offset = partial.points[size_t(i)] - lattice.sphere_points[size_t(sphere_idx)];
        const Vec3& n = partial.normals[size_t(i)];
        values[size_t(sphere_idx)] = {offset.x, offset.y, offset.z, n.x, n.y, n.z, 1.0, 0.0};
        is_assigned[size_t(sphere_idx)] = 1;
    }

    // propagate to unassigned sphere points from the nearest assigned one
    // (3D chordal distance between sphere points)
    if (n_in < lattice.n) {
        KdTree3 tree{std::span<const Vec3>(assigned_positions)};
        for (int j = 0; j < lattice.n; ++j) {
            if (is_assigned[size_t(j)]) continue;
            auto [nn, d2] = tree.nearest(KdTree3::make_point(lattice.sphere_points[size_t(j)]));
            values[size_t(j)] = values[size_t(assigned_sphere[size_t(nn)])];
            values[size_t(j)][kChMask] = 0.0;
        }
    }

    ShapeAtlas atlas;
    atlas.resize(lattice.grid_side, lattice.grid_side);
    atlas.lattice_id = lattice.id;
    atlas.source_id = std::move(source_id);
    for (int j = 0; j < lattice.n; ++j) {
        int cell = lattice.cell_of(j);
        double* v = &atlas.data[size_t(cell) * kAtlasChannels];
        for (int ch = 0; ch < kAtlasChannels; ++ch) v[ch] = values[size_t(j)][size_t(ch)];
    }
    return atlas;
}

/// Atlas -> point cloud. Each pixel maps back to its sphere point through
/// the inverse plane permutation; positions are sphere point + offset.
/// masked_only keeps only the directly assigned pixels (mask = 1).
inline PointCloud invert_atlas(const ShapeAtlas& atlas, const SphereLattice& lattice,
                               bool masked_only) {
    if (atlas.height != lattice.grid_side || atlas.width != lattice.grid_side)
        throw DimensionMismatch("invert_atlas: atlas dimensions do not match lattice");
    PointCloud cloud;
    cloud.points.reserve(size_t(lattice.n));
    cloud.normals.reserve(size_t(lattice.n));
    for (int cell = 0; cell < lattice.n; ++cell) {
        const double* v = &atlas.data[size_t(cell) * kAtlasChannels];
        if (masked_only && v[kChMask] < 0.5) continue;
        int j = lattice.lattice_at(cell);
        const Vec3& s = lattice.sphere_points[size_t(j)];
        cloud.points.push_back({s.x + v[kChOffsetX], s.y + v[kChOffsetY], s.z + v[kChOffsetZ]});
        cloud.normals.push_back({v[kChNormalX], v[kChNormalY], v[kChNormalZ]});
    }
    return cloud;
}

}  // namespace satlas
