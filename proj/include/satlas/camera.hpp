#pragma once

#include <cmath>
#include <vector>

#include "satlas/core.hpp"
#include "satlas/sphere_lattice.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Perspective cameras for partial-view generation, plus the rigid transform
// type used to carry world -> camera-frame (and centering) motion so ground
// truth geometry can be moved into the same frame as a generated view.
// ---------------------------------------------------------------------------

struct Camera {
    Vec3 position;
    Vec3 look_at;
    Vec3 up{0.0, 0.0, 1.0};
    double fov_deg = 120.0;
    int res_x = 512;
    int res_y = 512;

    void validate() const {
        if (position == look_at) throw ConfigError("camera position equals look_at");
        if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ConfigError("camera fov out of (0, 180)");
        if (res_x < 1 || res_y < 1) throw ConfigError("camera resolution must be positive");
    }
};

/// Proper rigid motion p -> R p + t (R given by rows). `apply_dir` rotates
/// without translating (for normals; R is orthonormal so no inverse-transpose
/// is needed).
struct RigidTransform {
    Vec3 row_x{1, 0, 0}, row_y{0, 1, 0}, row_z{0, 0, 1};
    Vec3 t{0, 0, 0};

    Vec3 apply_point(const Vec3& p) const {
        return Vec3{dot(row_x, p), dot(row_y, p), dot(row_z, p)} + t;
    }
    Vec3 apply_dir(const Vec3& d) const {
        return Vec3{dot(row_x, d), dot(row_y, d), dot(row_z, d)};
    }
};

/// Orthonormal camera basis: x = right, y = up, z = forward (into the scene).
struct CameraFrame {
    Vec3 right, up, forward;
    Vec3 position;
    double tan_half_x = 0.0, tan_half_y = 0.0;
    int width = 0, height = 0;

    explicit CameraFrame(const Camera& cam) {
        cam.validate();
        position = cam.position;
        forward = normalized(cam.look_at - cam.position);
        Vec3 r = cross(forward, cam.up);
        if (norm(r) < 1e-9) {
            // forward parallel to up: fall back to a fixed auxiliary axis
            Vec3 alt = std::abs(forward.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
            r = cross(forward, alt);
        }
        right = normalized(r);
        up = cross(right, forward);
        double half = cam.fov_deg * kPi / 180.0 / 2.0;
        tan_half_x = std::tan(half);
        tan_half_y = std::tan(half);
        width = cam.res_x;
        height = cam.res_y;
    }

    Vec3 to_camera(const Vec3& p) const {
        Vec3 d = p - position;
        return {dot(right, d), dot(up, d), dot(forward, d)};
    }

    /// World -> camera-frame rigid motion (no centering).
    RigidTransform world_to_camera() const {
        RigidTransform rt;
        rt.row_x = right;
        rt.row_y = up;
        rt.row_z = forward;
        rt.t = Vec3{-dot(right, position), -dot(up, position), -dot(forward, position)};
        return rt;
    }
};

/// Fibonacci spiral directions without the perfect-square restriction of the
/// atlas lattice (used for camera placement).
inline std::vector<Vec3> fibonacci_directions(int count) {
    const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> dirs;
    dirs.reserve(size_t(count));
    for (int i = 0; i < count; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / double(count);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double theta = golden_angle * double(i);
        dirs.push_back({r * std::cos(theta), r * std::sin(theta), z});
    }
    return dirs;
}

/// `count` cameras on a Fibonacci sphere of the given radius around
/// `mesh_center`, each aimed at the center plus a per-camera uniform random
/// offset in [-0.1, 0.1]^3. Deterministic for a fixed seed.
inline std::vector<Camera> sample_cameras(const Vec3& mesh_center, double radius, int count,
                                          uint64_t seed) {
    if (count < 1) throw ConfigError("sample_cameras: count must be >= 1");
    if (!(radius > 0.0)) throw ConfigError("sample_cameras: radius must be positive");
    std::vector<Camera> cams;
    cams.reserve(size_t(count));
    const std::vector<Vec3> dirs = fibonacci_directions(count);
    for (int i = 0; i < count; ++i) {
        Rng rng(mix_seed({seed, uint64_t(i), fnv1a64("camera-look-offset")}));
        Vec3 offset{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
        Camera cam;
        cam.position = mesh_center + dirs[size_t(i)] * radius;
        cam.look_at = mesh_center + offset;
        cams.push_back(cam);
    }
    return cams;
}

}  // namespace satlas
