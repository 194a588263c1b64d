#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "satlas/core.hpp"
#include "satlas/mesh.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Exact point-to-triangle distance with a bounding-volume hierarchy for
// point-to-mesh queries. The closest-point routine does the full Voronoi
// region case analysis (vertex / edge / interior), so distances are exact up
// to floating-point rounding — no sampling approximation.
// ---------------------------------------------------------------------------

/// Closest point to `p` on triangle (a, b, c).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;  // vertex region a

    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;  // vertex region b

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {  // edge region ab
        double v = d1 / (d1 - d3);
        return a + ab * v;
    }

    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;  // vertex region c

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {  // edge region ac
        double w = d2 / (d2 - d6);
        return a + ac * w;
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {  // edge region bc
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    const double denom = 1.0 / (va + vb + vc);  // interior
    const double v = vb * denom, w = vc * denom;
    return a + ab * v + ac * w;
}

inline double point_triangle_dist2(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    return dist2(p, closest_point_on_triangle(p, a, b, c));
}

struct Aabb {
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};

    void grow(const Vec3& p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    void grow(const Aabb& o) {
        grow(o.lo);
        grow(o.hi);
    }

    double dist2(const Vec3& p) const {
        double d = 0.0;
        for (int axis = 0; axis < 3; ++axis) {
            double lo_gap = lo[axis] - p[axis];
            double hi_gap = p[axis] - hi[axis];
            double gap = std::max({lo_gap, hi_gap, 0.0});
            d += gap * gap;
        }
        return d;
    }

    int widest_axis() const {
        Vec3 ext = hi - lo;
        if (ext.x >= ext.y && ext.x >= ext.z) return 0;
        return ext.y >= ext.z ? 1 : 2;
    }
};

/// Static median-split BVH over mesh triangles supporting exact nearest-
/// surface queries.
class TriangleBvh {
public:
    explicit TriangleBvh(const TriangleMesh& mesh) : mesh_(&mesh) {
        if (mesh.empty()) throw EmptyMesh("TriangleBvh over empty mesh");
        const size_t n = mesh.face_count();
        order_.resize(n);
        centroids_.resize(n);
        boxes_.resize(n);
        for (size_t f = 0; f < n; ++f) {
            order_[f] = uint32_t(f);
            const Vec3& a = mesh.vert(int(f), 0);
            const Vec3& b = mesh.vert(int(f), 1);
            const Vec3& c = mesh.vert(int(f), 2);
            centroids_[f] = (a + b + c) / 3.0;
            boxes_[f].grow(a);
            boxes_[f].grow(b);
            boxes_[f].grow(c);
        }
        nodes_.reserve(2 * n / kLeaf + 2);
        root_ = build(0, uint32_t(n));
    }

    /// Squared distance from p to the nearest triangle, and that face's index.
    std::pair<double, int> nearest2(const Vec3& p) const {
        double best = std::numeric_limits<double>::infinity();
        int best_face = -1;
        query(root_, p, best, best_face);
        return {best, best_face};
    }

    double distance(const Vec3& p) const { return std::sqrt(nearest2(p).first); }

private:
    static constexpr uint32_t kLeaf = 4;

    struct Node {
        Aabb box;
        uint32_t left = 0, right = 0;  // children, or [begin, end) for leaves
        bool leaf = false;
    };

    uint32_t build(uint32_t begin, uint32_t end) {
        Node node;
        for (uint32_t i = begin; i < end; ++i) node.box.grow(boxes_[order_[i]]);
        uint32_t idx = uint32_t(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= kLeaf) {
            nodes_[idx].leaf = true;
            nodes_[idx].left = begin;
            nodes_[idx].right = end;
            return idx;
        }
        int axis = node.box.widest_axis();
        uint32_t mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](uint32_t x, uint32_t y) {
                             double cx = centroids_[x][axis], cy = centroids_[y][axis];
                             return cx < cy || (cx == cy && x < y);
                         });
        uint32_t l = build(begin, mid);
        uint32_t r = build(mid, end);
        nodes_[idx].left = l;
        nodes_[idx].right = r;
        return idx;
    }

    void query(uint32_t node_idx, const Vec3& p, double& best, int& best_face) const {
        const Node& node = nodes_[node_idx];
        if (node.leaf) {
            for (uint32_t i = node.left; i < node.right; ++i) {
                uint32_t f = order_[i];
                double d2 = point_triangle_dist2(p, mesh_->vert(int(f), 0), mesh_->vert(int(f), 1),
                                                 mesh_->vert(int(f), 2));
                if (d2 < best || (d2 == best && int(f) < best_face)) {
                    best = d2;
                    best_face = int(f);
                }
            }
            return;
        }
        double dl = nodes_[node.left].box.dist2(p);
        double dr = nodes_[node.right].box.dist2(p);
        uint32_t first = node.left, second = node.right;
        double d_first = dl, d_second = dr;
        if (dr < dl) {
            std::swap(first, second);
            std::swap(d_first, d_second);
        }
        if (d_first <= best) query(first, p, best, best_face);
        if (d_second <= best) query(second, p, best, best_face);
    }

    const TriangleMesh* mesh_;
    std::vector<uint32_t> order_;
    std::vector<Vec3> centroids_;
    std::vector<Aabb> boxes_;
    std::vector<Node> nodes_;
    uint32_t root_ = 0;
};

}  // namespace satlas
