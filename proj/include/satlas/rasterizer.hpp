#pragma once

#include <cmath>
#include <vector>

#include "satlas/camera.hpp"
#include "satlas/core.hpp"
#include "satlas/mesh.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Software z-buffer rasterizer for face visibility.
//
// Pixels are sampled at their top-left corners: the sample for pixel
// (row, col) sits at NDC (2*col/W - 1, 1 - 2*row/H). Because 2c/W = 2(2c)/(2W)
// exactly in floating point, every sample of a W x H buffer is also a sample
// of a 2W x 2H buffer, and all screen-space quantities scale by an exact
// power of two — so visibility is monotone under resolution doubling, bit for
// bit. Depth testing is strict less-than on camera-space depth (greater-than
// on interpolated 1/z) with faces iterated in ascending index order, which
// resolves exact depth ties toward the lower face index.
// ---------------------------------------------------------------------------

struct VisibilityMask {
    int width = 0, height = 0;
    std::vector<char> visible;            // per mesh face
    std::vector<int32_t> pixel_face_ids;  // row-major, -1 where nothing was hit

    size_t visible_count() const {
        size_t n = 0;
        for (char v : visible) n += v != 0;
        return n;
    }
};

namespace detail {

constexpr double kNearPlane = 1e-3;

struct ScreenVertex {
    double sx, sy;     // screen coordinates, pixel units
    double inv_z;      // 1 / camera-space depth
};

/// Clips a camera-space triangle against z >= kNearPlane. Returns 0, 3, or 4
/// vertices (Sutherland-Hodgman against a single plane).
inline int clip_near(const Vec3 in[3], Vec3 out[4]) {
    int n_out = 0;
    for (int i = 0; i < 3; ++i) {
        const Vec3& a = in[i];
        const Vec3& b = in[(i + 1) % 3];
        bool a_in = a.z >= kNearPlane;
        bool b_in = b.z >= kNearPlane;
        if (a_in) out[n_out++] = a;
        if (a_in != b_in) {
            double s = (kNearPlane - a.z) / (b.z - a.z);
            out[n_out++] = a + (b - a) * s;
        }
    }
    return n_out;
}

}  // namespace detail

/// Rasterizes the mesh from the camera and reports which faces own at least
/// one pixel. Throws NothingVisible when no face covers any sample.
inline VisibilityMask rasterize_visibility(const TriangleMesh& mesh, const Camera& cam) {
    if (mesh.empty()) throw EmptyMesh("rasterize_visibility: mesh has no faces");
    CameraFrame frame(cam);
    const int W = frame.width, H = frame.height;

    VisibilityMask mask;
    mask.width = W;
    mask.height = H;
    mask.visible.assign(mesh.face_count(), 0);
    mask.pixel_face_ids.assign(size_t(W) * size_t(H), -1);
    std::vector<double> inv_z_buffer(size_t(W) * size_t(H), 0.0);  // 0 = infinitely far

    auto project = [&](const Vec3& q) -> detail::ScreenVertex {
        double ndc_x = q.x / (q.z * frame.tan_half_x);
        double ndc_y = q.y / (q.z * frame.tan_half_y);
        return {(ndc_x + 1.0) / 2.0 * W, (1.0 - ndc_y) / 2.0 * H, 1.0 / q.z};
    };

    Vec3 cam_space[3];
    Vec3 clipped[4];
    for (size_t f = 0; f < mesh.face_count(); ++f) {
        for (int c = 0; c < 3; ++c) cam_space[c] = frame.to_camera(mesh.vert(int(f), c));
        int n_clip = detail::clip_near(cam_space, clipped);
        if (n_clip < 3) continue;

        detail::ScreenVertex sv[4];
        for (int c = 0; c < n_clip; ++c) sv[c] = project(clipped[c]);

        for (int tri = 0; tri + 2 < n_clip; ++tri) {
            const detail::ScreenVertex& a = sv[0];
            const detail::ScreenVertex& b = sv[tri + 1];
            const detail::ScreenVertex& c = sv[tri + 2];

            double area = (b.sx - a.sx) * (c.sy - a.sy) - (b.sy - a.sy) * (c.sx - a.sx);
            if (area == 0.0) continue;  // edge-on

            double min_x = std::min({a.sx, b.sx, c.sx});
            double max_x = std::max({a.sx, b.sx, c.sx});
            double min_y = std::min({a.sy, b.sy, c.sy});
            double max_y = std::max({a.sy, b.sy, c.sy});
            int col0 = std::max(0, int(std::ceil(min_x)));
            int col1 = std::min(W - 1, int(std::floor(max_x)));
            int row0 = std::max(0, int(std::ceil(min_y)));
            int row1 = std::min(H - 1, int(std::floor(max_y)));
            if (col0 > col1 || row0 > row1) continue;

            for (int row = row0; row <= row1; ++row) {
                for (int col = col0; col <= col1; ++col) {
                    double px = double(col), py = double(row);
                    double e0 = (b.sx - a.sx) * (py - a.sy) - (b.sy - a.sy) * (px - a.sx);
                    double e1 = (c.sx - b.sx) * (py - b.sy) - (c.sy - b.sy) * (px - b.sx);
                    double e2 = (a.sx - c.sx) * (py - c.sy) - (a.sy - c.sy) * (px - c.sx);
                    bool all_nonneg = e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0;
                    bool all_nonpos = e0 <= 0.0 && e1 <= 0.0 && e2 <= 0.0;
                    if (!all_nonneg && !all_nonpos) continue;  // both windings accepted

                    // perspective-correct depth: 1/z interpolates linearly
                    double l0 = e1 / area, l1 = e2 / area, l2 = e0 / area;
                    double w = l0 * a.inv_z + l1 * b.inv_z + l2 * c.inv_z;
                    size_t px_idx = size_t(row) * size_t(W) + size_t(col);
                    if (w > inv_z_buffer[px_idx]) {
                        inv_z_buffer[px_idx] = w;
                        mask.pixel_face_ids[px_idx] = int32_t(f);
                    }
                }
            }
        }
    }

    bool any = false;
    for (int32_t id : mask.pixel_face_ids) {
        if (id >= 0) {
            mask.visible[size_t(id)] = 1;
            any = true;
        }
    }
    if (!any) throw NothingVisible("no face covers any pixel from this view");
    return mask;
}

}  // namespace satlas
