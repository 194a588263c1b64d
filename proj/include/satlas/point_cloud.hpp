#pragma once

#include <cstddef>
#include <vector>

#include "satlas/core.hpp"

namespace satlas {

/// Ordered list of 3D points with optional per-point unit normals.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty, or same length as points

    size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }

    /// Checks the type invariants: normals (if present) match the point count
    /// and are unit length to 1e-6, and no component is NaN/Inf.
    void validate() const {
        if (has_normals() && normals.size() != points.size())
            throw SizeMismatch("normal count does not match point count");
        for (const Vec3& p : points)
            if (!is_finite(p)) throw Error("point cloud contains non-finite point");
        for (const Vec3& n : normals) {
            if (!is_finite(n)) throw Error("point cloud contains non-finite normal");
            if (std::abs(norm(n) - 1.0) > 1e-6)
                throw Error("point cloud normal is not unit length");
        }
    }

    Vec3 centroid() const {
        if (points.empty()) throw EmptyCloud("centroid of empty cloud");
        Vec3 c{0, 0, 0};
        for (const Vec3& p : points) c += p;
        return c / double(points.size());
    }
};

/// Similarity transform p -> scale * (p + translation). Normals are unchanged
/// (translation plus uniform positive scaling).
struct NormalizationTransform {
    Vec3 translation{0, 0, 0};
    double scale = 1.0;

    Vec3 apply(const Vec3& p) const { return (p + translation) * scale; }
    Vec3 invert(const Vec3& q) const { return q / scale - translation; }

    PointCloud apply(const PointCloud& cloud) const {
        PointCloud out = cloud;
        for (Vec3& p : out.points) p = apply(p);
        return out;
    }
};

enum class NormalizeMode {
    unit_ball,      // center at centroid, scale so max point norm = 1
    centroid_only,  // translation only
};

/// Centers a cloud at its centroid and (in unit_ball mode) scales it so the
/// farthest point sits on the unit sphere. Returns the transformed cloud and
/// the transform so meshes / ground-truth clouds can be moved consistently.
inline std::pair<PointCloud, NormalizationTransform> normalize_center(const PointCloud& cloud,
                                                                      NormalizeMode mode) {
    if (cloud.empty()) throw EmptyCloud("normalize_center: empty cloud");
    NormalizationTransform t;
    t.translation = -cloud.centroid();
    if (mode == NormalizeMode::unit_ball) {
        double max_norm = 0.0;
        for (const Vec3& p : cloud.points) max_norm = std::max(max_norm, norm(p + t.translation));
        // A cloud of coincident points has no scale; leave it at 1.
        t.scale = max_norm > 1e-30 ? 1.0 / max_norm : 1.0;
    }
    PointCloud out = t.apply(cloud);
    out.normals = cloud.normals;
    return {std::move(out), t};
}

}  // namespace satlas
