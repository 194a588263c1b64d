#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <vector>

#include "satlas/assignment.hpp"
#include "satlas/binary_io.hpp"
#include "satlas/core.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// The fixed sphere lattice: N near-uniform unit-sphere points (Fibonacci
// spiral), their equirectangular plane coordinates, and the one-time
// minimum-cost permutation that packs those coordinates onto a regular
// sqrt(N) x sqrt(N) grid. The permutation is expensive at large N and depends
// only on (N, lattice version), so it is cached on disk.
// ---------------------------------------------------------------------------

/// Bump when the lattice construction or projection convention changes; the
/// version participates in the 16-byte lattice id embedded in data files.
inline constexpr const char* kLatticeVersion = "fib-equirect-v1";


/// 16-byte identifier: point count (u64 LE) followed by an FNV-1a hash of the
/// construction version string (u64 LE).
inline std::array<uint8_t, 16> lattice_id_for(int n) {
    std::array<uint8_t, 16> id{};
    uint64_t count = uint64_t(n);
    uint64_t tag = fnv1a64(kLatticeVersion);
    std::memcpy(id.data(), &count, 8);
    std::memcpy(id.data() + 8, &tag, 8);
    return id;
}

inline bool is_perfect_square(int n, int* root = nullptr) {
    if (n < 1) return false;
    int r = int(std::lround(std::sqrt(double(n))));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    if (root) *root = r;
    return r * r == n;
}

/// n near-uniform unit-sphere points on the Fibonacci spiral:
///   z_i = 1 - (2i+1)/n,  theta_i = i * pi * (3 - sqrt(5)).
/// Deterministic, O(n), and ordered from the +z pole downward so index
/// strides give stratified latitude coverage.
inline std::vector<Vec3> generate_lattice(int n) {
    if (!is_perfect_square(n)) throw NotPerfectSquare("lattice size must be a perfect square, got " + std::to_string(n));
    const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> pts;
    pts.resize(size_t(n));
    for (int i = 0; i < n; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / double(n);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double theta = golden_angle * double(i);
        pts[size_t(i)] = Vec3{r * std::cos(theta), r * std::sin(theta), z};
    }
    return pts;
}

/// Equirectangular chart: u from longitude, v from latitude, both affinely
/// mapped so u in [0,1) (the u=1 seam wraps to 0) and v in [0,1].
inline Vec2 equirect_project(const Vec3& s) {
    if (std::abs(norm(s) - 1.0) >= 1e-6)
        throw NotUnitVector("equirect_project expects a unit vector");
    double u = (std::atan2(s.y, s.x) + kPi) / (2.0 * kPi);
    if (u >= 1.0) u = 0.0;
    double z = std::min(1.0, std::max(-1.0, s.z));
    double v = (std::asin(z) + kPi / 2.0) / kPi;
    return Vec2{u, v};
}

/// Center of grid cell (row, col) in the unit square, matching the
/// projection's coordinate convention (x = u = column axis, y = v = row axis).
inline Vec2 grid_cell_center(int row, int col, int grid_side) {
    return Vec2{(col + 0.5) / double(grid_side), (row + 0.5) / double(grid_side)};
}

/// Minimum-cost bijection from `coords` onto the full grid of cell centers
/// under squared Euclidean cost. Returns cell index (row * grid_side + col)
/// per input index.
///
/// Candidate sizing: uniform-density k-NN graphs on the equirectangular chart
/// lose Hall's condition near the poles (latitude spacing stretches there),
/// and the threshold scales linearly with n — about n/31 for this lattice
/// family. k0 = n/24 clears it with margin; escalation covers the rest.
inline std::vector<int32_t> compute_plane_permutation(const std::vector<Vec2>& coords,
                                                      int grid_side) {
    const int n = grid_side * grid_side;
    if (int(coords.size()) != n)
        throw SizeMismatch("compute_plane_permutation: coords size must equal grid_side^2");

    std::vector<Vec2> centers;
    centers.resize(size_t(n));
    for (int row = 0; row < grid_side; ++row)
        for (int col = 0; col < grid_side; ++col)
            centers[size_t(row) * grid_side + col] = grid_cell_center(row, col, grid_side);

    const int k0 = std::min(n, std::max(50, (n + 23) / 24));
    const int k_max = std::min(n, std::max(k0, 2048));
    AssignmentResult res = escalate_and_solve(std::span<const Vec2>(coords),
                                              std::span<const Vec2>(centers), k0, k_max);
    return std::move(res.row_to_col);
}

// --- permutation cache file ------------------------------------------------
// Layout (all little-endian):
//   0  : magic "SPRM"
//   4  : u32 format version (1)
//   8  : u32 point count n
//   12 : u32 grid side
//   16 : 16-byte lattice id
//   32 : n x u32 cell index (row * grid_side + col)

inline constexpr uint32_t kPermCacheVersion = 1;

inline void save_permutation_cache(const std::filesystem::path& path, int n, int grid_side,
                                   const std::array<uint8_t, 16>& id,
                                   const std::vector<int32_t>& perm) {
    std::ostringstream os(std::ios::binary);
    os.write("SPRM", 4);
    write_u32(os, kPermCacheVersion);
    write_u32(os, uint32_t(n));
    write_u32(os, uint32_t(grid_side));
    os.write(reinterpret_cast<const char*>(id.data()), 16);
    for (int32_t cell : perm) write_u32(os, uint32_t(cell));
    atomic_write_file(path, os.str());
}

/// Loads a cached permutation; returns nullopt (a cache miss) when the file
/// is absent, malformed, or keyed to a different lattice.
inline std::optional<std::vector<int32_t>> load_permutation_cache(
    const std::filesystem::path& path, int n, int grid_side, const std::array<uint8_t, 16>& id) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    try {
        char magic[4];
        read_bytes(is, magic, 4);
        if (std::memcmp(magic, "SPRM", 4) != 0) return std::nullopt;
        if (read_u32(is) != kPermCacheVersion) return std::nullopt;
        if (read_u32(is) != uint32_t(n)) return std::nullopt;
        if (read_u32(is) != uint32_t(grid_side)) return std::nullopt;
        std::array<uint8_t, 16> file_id{};
        read_bytes(is, file_id.data(), 16);
        if (file_id != id) return std::nullopt;
        std::vector<int32_t> perm{};
        perm.resize(size_t(n));
        std::vector<char> seen(size_t(n), 0);
        for (int i = 0; i < n; ++i) {
            uint32_t cell = read_u32(is);
            if (cell >= uint32_t(n) || seen[cell]) return std::nullopt;
            seen[cell] = 1;
            perm[size_t(i)] = int32_t(cell);
        }
        return perm;
    } catch (const FormatError&) {
        return std::nullopt;
    }
}

/// The immutable lattice shared by every atlas operation.
struct SphereLattice {
    int n = 0;
    int grid_side = 0;
    std::vector<Vec3> sphere_points;
    std::vector<Vec2> equirect_coords;
    std::vector<int32_t> plane_permutation;   // lattice index -> cell index
    std::vector<int32_t> inverse_permutation; // cell index -> lattice index
    std::array<uint8_t, 16> id{};

    int cell_of(int lattice_index) const { return plane_permutation[size_t(lattice_index)]; }
    int lattice_at(int cell_index) const { return inverse_permutation[size_t(cell_index)]; }
};

/// Builds the lattice for n points, loading the plane permutation from
/// `cache_dir` when a valid cache exists and writing one back after a fresh
/// computation. Pass an empty path to skip caching.
inline SphereLattice make_lattice(int n, const std::filesystem::path& cache_dir = {}) {
    SphereLattice lat;
    if (!is_perfect_square(n, &lat.grid_side))
        throw NotPerfectSquare("lattice size must be a perfect square, got " + std::to_string(n));
    lat.n = n;
    lat.id = lattice_id_for(n);
    lat.sphere_points = generate_lattice(n);
    lat.equirect_coords.resize(size_t(n));
    for (int i = 0; i < n; ++i) lat.equirect_coords[size_t(i)] = equirect_project(lat.sphere_points[size_t(i)]);

    std::filesystem::path cache_file;
    if (!cache_dir.empty()) {
        cache_file = cache_dir / ("plane_perm_n" + std::to_string(n) + "_v" +
                                  std::to_string(kPermCacheVersion) + ".sprm");
        if (auto cached = load_permutation_cache(cache_file, n, lat.grid_side, lat.id)) {
            lat.plane_permutation = std::move(*cached);
        }
    }
    if (lat.plane_permutation.empty()) {
        lat.plane_permutation = compute_plane_permutation(lat.equirect_coords, lat.grid_side);
        if (!cache_file.empty())
            save_permutation_cache(cache_file, n, lat.grid_side, lat.id, lat.plane_permutation);
    }

    lat.inverse_permutation.assign(size_t(n), -1);
    for (int i = 0; i < n; ++i) lat.inverse_permutation[size_t(lat.plane_permutation[size_t(i)])] = i;
    return lat;
}

}  // namespace satlas
