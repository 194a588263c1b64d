// Foundations: vector algebra, face normals, area-uniform surface sampling,
// normalization transforms, and the deterministic RNG.
//
// Oracles used here:
//  - scalar cross products expanded long-hand (independent of Vec3::cross)
//  - Heron's formula for triangle areas
//  - binomial / multinomial bounds for area-weighted sampling

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "satlas/core.hpp"
#include "satlas/mesh.hpp"
#include "satlas/point_cloud.hpp"

using namespace satlas;
using satlas_test::make_box_mesh;
using satlas_test::make_icosphere;
using satlas_test::make_torus_mesh;

namespace {

// Cross product via explicit cofactor expansion, kept deliberately separate
// from the library's implementation.
Vec3 cross_oracle(const Vec3& a, const Vec3& b) {
    const double cx = a.y * b.z - a.z * b.y;
    const double cy = a.z * b.x - a.x * b.z;
    const double cz = a.x * b.y - a.y * b.x;
    return Vec3{cx, cy, cz};
}

double heron_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    const double la = norm(b - a), lb = norm(c - b), lc = norm(a - c);
    const double s = 0.5 * (la + lb + lc);
    const double under = s * (s - la) * (s - lb) * (s - lc);
    return std::sqrt(std::max(0.0, under));
}

TriangleMesh single_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
    TriangleMesh m;
    m.vertices = {a, b, c};
    m.faces = {{0, 1, 2}};
    return m;
}

}  // namespace

TEST_CASE("vector algebra basics") {
    const Vec3 x{1, 0, 0}, y{0, 1, 0}, z{0, 0, 1};
    REQUIRE(dot(x, y) == 0.0);
    REQUIRE(norm(Vec3{3, 4, 0}) == Catch::Approx(5.0));
    REQUIRE(norm(cross(x, y) - z) == 0.0);
    REQUIRE(norm(cross(y, x) + z) == 0.0);

    Rng rng(401);
    for (int i = 0; i < 100; ++i) {
        const Vec3 a = rng.unit_vector() * rng.uniform(0.1, 5.0);
        const Vec3 b = rng.unit_vector() * rng.uniform(0.1, 5.0);
        const Vec3 c = cross(a, b);
        REQUIRE(norm(c - cross_oracle(a, b)) < 1e-12);
        // c is orthogonal to both inputs
        REQUIRE(std::abs(dot(c, a)) < 1e-9);
        REQUIRE(std::abs(dot(c, b)) < 1e-9);
        // anti-commutativity
        REQUIRE(norm(cross(b, a) + c) == 0.0);
    }
}

TEST_CASE("face normals follow the right-hand winding rule") {
    SECTION("counter-clockwise triangle in the xy plane points +z") {
        TriangleMesh m = single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
        auto normals = compute_face_normals(m);
        REQUIRE(normals.size() == 1);
        REQUIRE(norm(normals[0] - Vec3{0, 0, 1}) < 1e-15);
    }
    SECTION("reversed winding flips the normal") {
        TriangleMesh m = single_triangle({0, 0, 0}, {0, 1, 0}, {1, 0, 0});
        auto normals = compute_face_normals(m);
        REQUIRE(norm(normals[0] - Vec3{0, 0, -1}) < 1e-15);
    }
    SECTION("skew triangle matches the scalar cross-product oracle") {
        const Vec3 a{0, 0, 0}, b{1, 0, 0}, c{1, 1, 1};
        TriangleMesh m = single_triangle(a, b, c);
        auto normals = compute_face_normals(m);
        const Vec3 expected = normalized(cross_oracle(b - a, c - a));
        // cross((1,0,0),(1,1,1)) = (0,-1,1); normalized = (0,-1,1)/sqrt(2)
        REQUIRE(norm(expected - Vec3{0.0, -1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}) < 1e-15);
        REQUIRE(norm(normals[0] - expected) < 1e-12);
    }
    SECTION("random triangles match the oracle and are unit length") {
        Rng rng(77);
        for (int i = 0; i < 50; ++i) {
            const Vec3 a = rng.unit_vector() * 2.0;
            const Vec3 b = a + rng.unit_vector();
            const Vec3 c = a + rng.unit_vector();
            if (triangle_area(a, b, c) < 1e-6) continue;
            TriangleMesh m = single_triangle(a, b, c);
            auto normals = compute_face_normals(m);
            REQUIRE(std::abs(norm(normals[0]) - 1.0) < 1e-9);
            REQUIRE(norm(normals[0] - normalized(cross_oracle(b - a, c - a))) < 1e-12);
        }
    }
}

TEST_CASE("degenerate faces are detected and droppable") {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}};
    m.faces = {{0, 1, 2}, {0, 1, 3}};  // second face is collinear: zero area
    REQUIRE_THROWS_AS(compute_face_normals(m), DegenerateFace);

    const size_t dropped = drop_degenerate_faces(m);
    REQUIRE(dropped == 1);
    REQUIRE(m.faces.size() == 1);
    REQUIRE_NOTHROW(compute_face_normals(m));

    // all-degenerate mesh drops to empty
    TriangleMesh flat;
    flat.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    flat.faces = {{0, 1, 2}};
    REQUIRE(drop_degenerate_faces(flat) == 1);
    REQUIRE(flat.faces.empty());
}

TEST_CASE("total surface area matches a Heron-formula oracle") {
    auto check = [](const TriangleMesh& m) {
        double lib = 0.0;
        for (double a : face_areas(m)) lib += a;
        double oracle = 0.0;
        for (size_t f = 0; f < m.face_count(); ++f)
            oracle += heron_area(m.vert(int(f), 0), m.vert(int(f), 1), m.vert(int(f), 2));
        REQUIRE(lib == Catch::Approx(oracle).epsilon(1e-9));
    };
    check(make_icosphere(2));
    check(make_box_mesh(3, {1.0, 0.5, 2.0}));
    check(make_torus_mesh(24, 16));
}

TEST_CASE("surface sampling is area-uniform and deterministic") {
    SECTION("split unit square: half the mass on each side") {
        TriangleMesh sq;
        sq.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
        sq.faces = {{0, 1, 2}, {0, 2, 3}};
        PointCloud cloud = sample_surface(sq, 10000, 7);
        REQUIRE(cloud.size() == 10000);
        int below = 0;
        for (const Vec3& p : cloud.points) below += p.x < 0.5;
        REQUIRE(std::abs(below / 10000.0 - 0.5) < 0.02);
        // flat square: every sample carries the +z face normal
        for (const Vec3& n : cloud.normals) REQUIRE(norm(n - Vec3{0, 0, 1}) < 1e-12);
    }
    SECTION("3:1 area ratio gives a 3:1 sample split") {
        TriangleMesh m;
        m.vertices = {{0, 0, 0}, {3, 0, 0},  {0, 2, 0},   // area 3
                      {10, 0, 0}, {11, 0, 0}, {10, 2, 0}};  // area 1
        m.faces = {{0, 1, 2}, {3, 4, 5}};
        PointCloud cloud = sample_surface(m, 40000, 3);
        int big = 0;
        for (const Vec3& p : cloud.points) big += p.x < 5.0;
        REQUIRE(std::abs(big / 40000.0 - 0.75) < 0.02);
    }
    SECTION("samples lie on their faces") {
        const Vec3 a{0.3, -1.2, 0.5}, b{2.0, 0.1, -0.4}, c{-0.7, 1.5, 2.2};
        TriangleMesh tri = single_triangle(a, b, c);
        PointCloud one = sample_surface(tri, 1, 11);
        REQUIRE(one.size() == 1);
        const Vec3 n = normalized(cross(b - a, c - a));
        REQUIRE(std::abs(dot(n, one.points[0] - a)) < 1e-9);

        PointCloud many = sample_surface(tri, 500, 12);
        for (const Vec3& p : many.points) REQUIRE(std::abs(dot(n, p - a)) < 1e-9);
    }
    SECTION("deterministic per seed") {
        TriangleMesh ico = make_icosphere(1);
        PointCloud c1 = sample_surface(ico, 256, 99);
        PointCloud c2 = sample_surface(ico, 256, 99);
        PointCloud c3 = sample_surface(ico, 256, 100);
        REQUIRE(c1.size() == c2.size());
        for (size_t i = 0; i < c1.size(); ++i) {
            REQUIRE(c1.points[i] == c2.points[i]);
            REQUIRE(c1.normals[i] == c2.normals[i]);
        }
        bool any_differs = false;
        for (size_t i = 0; i < c1.size(); ++i) any_differs |= !(c1.points[i] == c3.points[i]);
        REQUIRE(any_differs);
    }
    SECTION("error cases") {
        TriangleMesh empty;
        REQUIRE_THROWS_AS(sample_surface(empty, 10, 0), EmptyMesh);
        TriangleMesh tri = single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
        REQUIRE_THROWS_AS(sample_surface(tri, 0, 0), Error);
    }
}

TEST_CASE("normalization: unit ball and centroid-only modes") {
    SECTION("symmetric pair lands on the unit sphere") {
        PointCloud cloud;
        cloud.points = {{2, 0, 0}, {-2, 0, 0}};
        auto [out, tf] = normalize_center(cloud, NormalizeMode::unit_ball);
        REQUIRE(norm(out.points[0] - Vec3{1, 0, 0}) < 1e-15);
        REQUIRE(norm(out.points[1] - Vec3{-1, 0, 0}) < 1e-15);
        REQUIRE(norm(tf.translation) < 1e-15);
        REQUIRE(tf.scale == Catch::Approx(0.5));
    }
    SECTION("single point collapses to the origin under centroid_only") {
        PointCloud cloud;
        cloud.points = {{5, 5, 5}};
        auto [out, tf] = normalize_center(cloud, NormalizeMode::centroid_only);
        REQUIRE(norm(out.points[0]) < 1e-15);
        REQUIRE(tf.scale == 1.0);
        REQUIRE(norm(tf.translation + Vec3{5, 5, 5}) < 1e-15);
    }
    SECTION("random cloud: exact centroid and max norm, invertible") {
        PointCloud cloud = satlas_test::random_cloud(100, 31, 3.0);
        for (Vec3& p : cloud.points) p += Vec3{4.0, -2.0, 1.0};  // off-center
        auto [out, tf] = normalize_center(cloud, NormalizeMode::unit_ball);

        Vec3 centroid = out.centroid();
        REQUIRE(norm(centroid) < 1e-9);
        double max_norm = 0.0;
        for (const Vec3& p : out.points) max_norm = std::max(max_norm, norm(p));
        REQUIRE(max_norm == Catch::Approx(1.0).margin(1e-9));

        for (size_t i = 0; i < cloud.size(); ++i) {
            const Vec3 back = tf.invert(out.points[i]);
            REQUIRE(norm(back - cloud.points[i]) < 1e-9 * (1.0 + norm(cloud.points[i])));
        }
    }
    SECTION("empty cloud is rejected") {
        PointCloud empty;
        REQUIRE_THROWS_AS(normalize_center(empty, NormalizeMode::unit_ball), EmptyCloud);
    }
}

TEST_CASE("rng and seed mixing are deterministic") {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 64; ++i) {
        const double va = a.uniform();
        REQUIRE(va == b.uniform());
        REQUIRE(va >= 0.0);
        REQUIRE(va < 1.0);
        differs |= va != c.uniform();
    }
    REQUIRE(differs);

    REQUIRE(mix_seed({1, 2}) == mix_seed({1, 2}));
    REQUIRE(mix_seed({1, 2}) != mix_seed({2, 1}));
    REQUIRE(fnv1a64("alpha") != fnv1a64("beta"));

    Rng r(7);
    for (int i = 0; i < 100; ++i) REQUIRE(std::abs(norm(r.unit_vector()) - 1.0) < 1e-12);
}

TEST_CASE("point cloud validation catches broken invariants") {
    PointCloud good = satlas_test::random_cloud(16, 5);
    REQUIRE_NOTHROW(good.validate());

    PointCloud short_normals = good;
    short_normals.normals.pop_back();
    REQUIRE_THROWS_AS(short_normals.validate(), SizeMismatch);

    PointCloud long_normal = good;
    long_normal.normals[0] = Vec3{2, 0, 0};
    REQUIRE_THROWS(long_normal.validate());

    PointCloud inf_point = good;
    inf_point.points[0].x = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS(inf_point.validate());
}
