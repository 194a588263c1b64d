// Sphere lattice: Fibonacci point set, equirectangular projection, and the
// one-time grid permutation plus its disk cache.
//
// Oracles used here:
//  - brute-force all-pairs nearest-neighbor spacing scan
//  - exhaustive enumeration of all bijections for grids up to 3x3
//  - a greedy row-major matcher as an upper bound at full scale

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "satlas/core.hpp"
#include "satlas/sphere_lattice.hpp"

using namespace satlas;
namespace fs = std::filesystem;

namespace {

/// Minimum-cost bijection cost by enumerating every permutation.
double enumerate_bijection_cost(const std::vector<Vec2>& coords, const std::vector<Vec2>& centers) {
    std::vector<int> perm(coords.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0.0;
        for (size_t i = 0; i < coords.size(); ++i) acc += dist2(coords[i], centers[size_t(perm[i])]);
        best = std::min(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double permutation_cost(const std::vector<Vec2>& coords, const std::vector<int32_t>& perm,
                        int grid_side) {
    double acc = 0.0;
    for (size_t i = 0; i < coords.size(); ++i) {
        const int cell = perm[i];
        acc += dist2(coords[i], grid_cell_center(cell / grid_side, cell % grid_side, grid_side));
    }
    return acc;
}

std::vector<Vec2> all_cell_centers(int grid_side) {
    std::vector<Vec2> centers;
    for (int row = 0; row < grid_side; ++row)
        for (int col = 0; col < grid_side; ++col) centers.push_back(grid_cell_center(row, col, grid_side));
    return centers;
}

void require_bijection(const std::vector<int32_t>& perm, int n) {
    REQUIRE(int(perm.size()) == n);
    std::vector<char> seen(size_t(n), 0);
    for (int32_t cell : perm) {
        REQUIRE(cell >= 0);
        REQUIRE(cell < n);
        REQUIRE(!seen[size_t(cell)]);
        seen[size_t(cell)] = 1;
    }
}

}  // namespace

TEST_CASE("lattice points are unit vectors") {
    SECTION("single point") {
        auto pts = generate_lattice(1);
        REQUIRE(pts.size() == 1);
        REQUIRE(std::abs(norm(pts[0]) - 1.0) < 1e-12);
    }
    SECTION("full-scale lattice") {
        auto pts = generate_lattice(16384);
        REQUIRE(pts.size() == 16384);
        for (const Vec3& p : pts) REQUIRE(std::abs(norm(p) - 1.0) < 1e-12);
    }
    SECTION("non-square sizes are rejected") {
        REQUIRE_THROWS_AS(generate_lattice(12), NotPerfectSquare);
        REQUIRE_THROWS_AS(generate_lattice(0), NotPerfectSquare);
        REQUIRE_THROWS_AS(generate_lattice(-4), NotPerfectSquare);
    }
    SECTION("deterministic") {
        auto a = generate_lattice(256), b = generate_lattice(256);
        for (size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
    }
}

TEST_CASE("lattice spacing is near-uniform (all-pairs scan)") {
    const auto pts = generate_lattice(1024);
    double min_nn = std::numeric_limits<double>::infinity();
    double max_nn = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < pts.size(); ++j) {
            if (i == j) continue;
            nearest = std::min(nearest, dist2(pts[i], pts[j]));
        }
        min_nn = std::min(min_nn, nearest);
        max_nn = std::max(max_nn, nearest);
    }
    REQUIRE(std::sqrt(max_nn / min_nn) < 2.0);
}

TEST_CASE("equirectangular projection hits its reference values") {
    // longitude seam at the -x axis, equator
    Vec2 seam = equirect_project({-1, 0, 0});
    REQUIRE(seam.x == 0.0);  // u = 1 wraps to 0
    REQUIRE(seam.y == 0.5);

    // north pole: v is exactly 1 regardless of longitude; atan2(0,0) = 0
    Vec2 pole = equirect_project({0, 0, 1});
    REQUIRE(pole.x == 0.5);
    REQUIRE(pole.y == 1.0);

    // +y axis: atan2(1,0) = pi/2
    Vec2 east = equirect_project({0, 1, 0});
    REQUIRE(east.x == Catch::Approx(0.75).margin(1e-15));
    REQUIRE(east.y == Catch::Approx(0.5).margin(1e-15));

    REQUIRE_THROWS_AS(equirect_project({2, 0, 0}), NotUnitVector);
    REQUIRE_THROWS_AS(equirect_project({0, 0, 0}), NotUnitVector);

    // range check over a mid-sized lattice
    for (const Vec3& p : generate_lattice(4096)) {
        Vec2 c = equirect_project(p);
        REQUIRE(c.x >= 0.0);
        REQUIRE(c.x < 1.0);
        REQUIRE(c.y >= 0.0);
        REQUIRE(c.y <= 1.0);
    }
}

TEST_CASE("projected lattice coordinates are pairwise distinct") {
    const auto pts = generate_lattice(16384);
    std::vector<Vec2> coords;
    coords.reserve(pts.size());
    for (const Vec3& p : pts) coords.push_back(equirect_project(p));
    std::sort(coords.begin(), coords.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    for (size_t i = 1; i < coords.size(); ++i) {
        const bool same = std::abs(coords[i].x - coords[i - 1].x) < 1e-12 &&
                          std::abs(coords[i].y - coords[i - 1].y) < 1e-12;
        REQUIRE(!same);
    }
}

TEST_CASE("plane permutation is optimal on enumerable grids") {
    SECTION("coords equal to the cell centers: identity at zero cost") {
        const auto centers = all_cell_centers(2);
        auto perm = compute_plane_permutation(centers, 2);
        require_bijection(perm, 4);
        for (int i = 0; i < 4; ++i) REQUIRE(perm[size_t(i)] == i);
        REQUIRE(permutation_cost(centers, perm, 2) == 0.0);
    }
    SECTION("3x3 centers shifted one cell to the right") {
        const auto centers = all_cell_centers(3);
        std::vector<Vec2> coords = centers;
        for (Vec2& c : coords) c.x += 1.0 / 3.0;
        auto perm = compute_plane_permutation(coords, 3);
        require_bijection(perm, 9);
        // optimal recovery shifts every point one cell back: index identity
        for (int i = 0; i < 9; ++i) REQUIRE(perm[size_t(i)] == i);
        const double cost = permutation_cost(coords, perm, 3);
        REQUIRE(cost == Catch::Approx(9.0 * (1.0 / 9.0)).epsilon(1e-12));
        REQUIRE(cost == Catch::Approx(enumerate_bijection_cost(coords, centers)).epsilon(1e-12));
    }
    SECTION("random 2x2 and 3x3 coordinates match exhaustive enumeration") {
        Rng rng(12021);
        for (int trial = 0; trial < 10; ++trial) {
            for (int side : {2, 3}) {
                const int n = side * side;
                std::vector<Vec2> coords;
                for (int i = 0; i < n; ++i) coords.push_back({rng.uniform(), rng.uniform()});
                auto perm = compute_plane_permutation(coords, side);
                require_bijection(perm, n);
                const double cost = permutation_cost(coords, perm, side);
                const double best = enumerate_bijection_cost(coords, all_cell_centers(side));
                REQUIRE(cost == Catch::Approx(best).margin(1e-12));
            }
        }
    }
    SECTION("size mismatch is rejected") {
        REQUIRE_THROWS_AS(compute_plane_permutation(all_cell_centers(2), 3), SizeMismatch);
    }
}

TEST_CASE("make_lattice wires projection, permutation, and inverse together") {
    SphereLattice lat = make_lattice(256);
    REQUIRE(lat.n == 256);
    REQUIRE(lat.grid_side == 16);
    REQUIRE(lat.sphere_points.size() == 256);
    REQUIRE(lat.equirect_coords.size() == 256);
    require_bijection(lat.plane_permutation, 256);
    for (int i = 0; i < 256; ++i) REQUIRE(lat.lattice_at(lat.cell_of(i)) == i);
    REQUIRE_THROWS_AS(make_lattice(200), NotPerfectSquare);

    // identity is stable and distinguishes sizes
    REQUIRE(lat.id == lattice_id_for(256));
    REQUIRE(lattice_id_for(256) != lattice_id_for(1024));
}

TEST_CASE("permutation cache round-trips bit-identically") {
    const fs::path dir = fs::temp_directory_path() / "satlas_lattice_cache_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    SphereLattice fresh = make_lattice(256, dir);
    const fs::path cache_file = dir / "plane_perm_n256_v1.sprm";
    REQUIRE(fs::exists(cache_file));

    SphereLattice reloaded = make_lattice(256, dir);
    REQUIRE(reloaded.plane_permutation == fresh.plane_permutation);

    SphereLattice uncached = make_lattice(256);
    REQUIRE(uncached.plane_permutation == fresh.plane_permutation);

    SECTION("corrupt cache is ignored and recomputed") {
        auto bytes = read_file(cache_file);
        bytes[0] = 'X';  // break the magic
        atomic_write_file(cache_file, bytes);
        SphereLattice recovered = make_lattice(256, dir);
        REQUIRE(recovered.plane_permutation == fresh.plane_permutation);
    }
    fs::remove_all(dir);
}

TEST_CASE("full-scale permutation beats the greedy row-major baseline") {
    // The shared on-disk cache makes this one-time computation reusable by
    // the other suites (and keeps reruns fast).
    SphereLattice lat = make_lattice(16384, "satlas_test_cache");
    require_bijection(lat.plane_permutation, 16384);

    const double optimal = permutation_cost(lat.equirect_coords, lat.plane_permutation, lat.grid_side);

    // Greedy baseline: walk cells row-major, each takes its nearest unused
    // coordinate. Any feasible bijection bounds the optimum from above.
    const int n = lat.n;
    std::vector<char> used(size_t(n), 0);
    double greedy = 0.0;
    for (int cell = 0; cell < n; ++cell) {
        const Vec2 center =
            grid_cell_center(cell / lat.grid_side, cell % lat.grid_side, lat.grid_side);
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (used[size_t(i)]) continue;
            const double d = dist2(lat.equirect_coords[size_t(i)], center);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        used[size_t(best)] = 1;
        greedy += best_d;
    }
    REQUIRE(optimal <= greedy + 1e-9);
}
