#pragma once

#include <vector>

#include "satlas/camera.hpp"
#include "satlas/core.hpp"
#include "satlas/mesh.hpp"
#include "satlas/point_cloud.hpp"
#include "satlas/rasterizer.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Incomplete (single-scan style) point clouds from a mesh and a camera:
// rasterize face visibility, sample area-uniformly over the visible faces
// only, move everything into the camera frame, and center at the sampled
// cloud's centroid. The applied rigid motion is returned so ground-truth
// geometry can be aligned into the same frame.
// ---------------------------------------------------------------------------

struct PartialViewResult {
    PointCloud cloud;          // centered, camera-frame points + face normals
    RigidTransform transform;  // world -> output frame (rotation + translation)
    size_t visible_faces = 0;
};

inline PartialViewResult make_partial_cloud(const TriangleMesh& mesh, const Camera& cam,
                                            int n_points, uint64_t seed) {
    if (n_points < 1) throw ConfigError("make_partial_cloud: n_points must be >= 1");
    VisibilityMask mask = rasterize_visibility(mesh, cam);  // may throw NothingVisible

    TriangleMesh visible_mesh;
    visible_mesh.vertices = mesh.vertices;
    const std::vector<Vec3>& normals =
        mesh.face_normals.size() == mesh.faces.size() ? mesh.face_normals : compute_face_normals(mesh);
    std::vector<Vec3> visible_normals;
    for (size_t f = 0; f < mesh.face_count(); ++f) {
        if (!mask.visible[f]) continue;
        visible_mesh.faces.push_back(mesh.faces[f]);
        visible_normals.push_back(normals[f]);
    }
    visible_mesh.face_normals = std::move(visible_normals);

    PointCloud world = sample_surface(visible_mesh, n_points, seed);

    CameraFrame frame(cam);
    RigidTransform to_cam = frame.world_to_camera();
    PointCloud cam_cloud;
    cam_cloud.points.reserve(world.size());
    cam_cloud.normals.reserve(world.size());
    for (size_t i = 0; i < world.size(); ++i) {
        cam_cloud.points.push_back(to_cam.apply_point(world.points[i]));
        cam_cloud.normals.push_back(to_cam.apply_dir(world.normals[i]));
    }

    Vec3 centroid = cam_cloud.centroid();
    for (Vec3& p : cam_cloud.points) p -= centroid;

    PartialViewResult out;
    out.cloud = std::move(cam_cloud);
    out.transform = to_cam;
    out.transform.t -= centroid;
    out.visible_faces = mask.visible_count();
    return out;
}

}  // namespace satlas
