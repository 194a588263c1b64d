#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <queue>
#include <vector>

#include "satlas/core.hpp"

namespace satlas {

/// Static k-d tree over DIM-dimensional points (DIM = 2 or 3 in this library).
/// Build once, then run nearest / k-nearest / radius queries. Ties on distance
/// are broken by the lower point index, so query results are deterministic
/// regardless of tree layout.
template <int DIM>
class KdTree {
    static_assert(DIM == 2 || DIM == 3, "KdTree supports 2D and 3D points");

public:
    using Point = std::array<double, DIM>;

    KdTree() = default;

    template <class PointRange>
    explicit KdTree(const PointRange& pts) {
        points_.reserve(pts.size());
        for (const auto& p : pts) {
            Point q;
            for (int d = 0; d < DIM; ++d) q[d] = p[d];
            points_.push_back(q);
        }
        index_.resize(points_.size());
        for (uint32_t i = 0; i < index_.size(); ++i) index_[i] = i;
        if (!points_.empty()) {
            nodes_.reserve(2 * points_.size() / kLeafSize + 2);
            root_ = build(0, uint32_t(points_.size()));
        }
    }

    size_t size() const { return points_.size(); }

    /// Index and squared distance of the nearest point to `q`.
    std::pair<int, double> nearest(const Point& q) const {
        int best = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        nearest_rec(root_, q, best, best_d2);
        return {best, best_d2};
    }

    /// The k nearest points, sorted ascending by (squared distance, index).
    /// Returns fewer than k entries when the tree holds fewer points.
    void knn(const Point& q, int k, std::vector<std::pair<double, int>>& out) const {
        out.clear();
        if (k <= 0 || points_.empty()) return;
        // max-heap on (dist2, index); lexicographic pair order doubles as the
        // deterministic tie-break at the k-th slot
        std::priority_queue<std::pair<double, int>> heap;
        knn_rec(root_, q, k, heap);
        out.resize(heap.size());
        for (size_t i = out.size(); i-- > 0;) {
            out[i] = heap.top();
            heap.pop();
        }
    }

    /// Indices of all points within radius r of q (squared distance <= r*r),
    /// sorted ascending by index.
    void radius(const Point& q, double r, std::vector<int>& out) const {
        out.clear();
        if (points_.empty()) return;
        radius_rec(root_, q, r * r, out);
        std::sort(out.begin(), out.end());
    }

    static Point make_point(const Vec3& v)
        requires(DIM == 3)
    {
        return {v.x, v.y, v.z};
    }
    static Point make_point(const Vec2& v)
        requires(DIM == 2)
    {
        return {v.x, v.y};
    }

private:
    static constexpr uint32_t kLeafSize = 8;

    struct Node {
        double split = 0.0;
        int32_t axis = -1;  // -1 marks a leaf
        uint32_t begin = 0, end = 0;
        int32_t left = -1, right = -1;
    };

    static double dist2(const Point& a, const Point& b) {
        double s = 0.0;
        for (int d = 0; d < DIM; ++d) {
            double diff = a[d] - b[d];
            s += diff * diff;
        }
        return s;
    }

    int32_t build(uint32_t begin, uint32_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        if (end - begin <= kLeafSize) {
            nodes_.push_back(node);
            return int32_t(nodes_.size() - 1);
        }
        // split along the widest axis at the median
        Point lo = points_[index_[begin]], hi = lo;
        for (uint32_t i = begin + 1; i < end; ++i) {
            const Point& p = points_[index_[i]];
            for (int d = 0; d < DIM; ++d) {
                lo[d] = std::min(lo[d], p[d]);
                hi[d] = std::max(hi[d], p[d]);
            }
        }
        int axis = 0;
        for (int d = 1; d < DIM; ++d)
            if (hi[d] - lo[d] > hi[axis] - lo[axis]) axis = d;
        uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                         [&](uint32_t a, uint32_t b) {
                             double pa = points_[a][axis], pb = points_[b][axis];
                             return pa < pb || (pa == pb && a < b);
                         });
        node.axis = axis;
        node.split = points_[index_[mid]][axis];
        nodes_.push_back(node);
        int32_t self = int32_t(nodes_.size() - 1);
        int32_t left = build(begin, mid);
        int32_t right = build(mid, end);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
    }

    void nearest_rec(int32_t ni, const Point& q, int& best, double& best_d2) const {
        const Node& n = nodes_[ni];
        if (n.axis < 0) {
            for (uint32_t i = n.begin; i < n.end; ++i) {
                int idx = int(index_[i]);
                double d2 = dist2(points_[idx], q);
                if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                    best = idx;
                    best_d2 = d2;
                }
            }
            return;
        }
        double delta = q[n.axis] - n.split;
        int32_t near = delta < 0 ? n.left : n.right;
        int32_t far = delta < 0 ? n.right : n.left;
        nearest_rec(near, q, best, best_d2);
        if (delta * delta <= best_d2) nearest_rec(far, q, best, best_d2);
    }

    void knn_rec(int32_t ni, const Point& q, int k,
                 std::priority_queue<std::pair<double, int>>& heap) const {
        const Node& n = nodes_[ni];
        if (n.axis < 0) {
            for (uint32_t i = n.begin; i < n.end; ++i) {
                int idx = int(index_[i]);
                std::pair<double, int> cand(dist2(points_[idx], q), idx);
                if (int(heap.size()) < k) {
                    heap.push(cand);
                } else if (cand < heap.top()) {
                    heap.pop();
                    heap.push(cand);
                }
            }
            return;
        }
        double delta = q[n.axis] - n.split;
        int32_t near = delta < 0 ? n.left : n.right;
        int32_t far = delta < 0 ? n.right : n.left;
        knn_rec(near, q, k, heap);
        if (int(heap.size()) < k || delta * delta <= heap.top().first) knn_rec(far, q, k, heap);
    }

    void radius_rec(int32_t ni, const Point& q, double r2, std::vector<int>& out) const {
        const Node& n = nodes_[ni];
        if (n.axis < 0) {
            for (uint32_t i = n.begin; i < n.end; ++i) {
                int idx = int(index_[i]);
                if (dist2(points_[idx], q) <= r2) out.push_back(idx);
            }
            return;
        }
        double delta = q[n.axis] - n.split;
        int32_t near = delta < 0 ? n.left : n.right;
        int32_t far = delta < 0 ? n.right : n.left;
        radius_rec(near, q, r2, out);
        if (delta * delta <= r2) radius_rec(far, q, r2, out);
    }

    std::vector<Point> points_;
    std::vector<uint32_t> index_;
    std::vector<Node> nodes_;
    int32_t root_ = -1;
};

using KdTree2 = KdTree<2>;
using KdTree3 = KdTree<3>;

}  // namespace satlas
