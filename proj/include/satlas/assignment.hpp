#pragma once

#include <concepts>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "satlas/core.hpp"
#include "satlas/kdtree.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Linear assignment (discrete optimal transport).
//
// Two solvers share the same shortest-augmenting-path core with dual
// potentials (the Jonker-Volgenant family):
//   * solve_dense  - complete cost matrix, dense row scans, O(n^3) worst case.
//   * solve_sparse - candidate edges only (k nearest neighbors per row),
//                    heap Dijkstra with early exit, O(k n^2) worst case.
// Both are exactly optimal on their edge set. The sparse solver throws
// AssignmentInfeasible when the candidate graph admits no row-perfect
// matching; escalate_and_solve retries with doubled k and finally falls back
// to a dense solve for instances small enough to afford it.
// ---------------------------------------------------------------------------

struct AssignmentResult {
    std::vector<int32_t> row_to_col;  // injective, size = rows
    double total_cost = 0.0;
};

template <class M>
concept CostMatrixLike = requires(const M& m, int i, int j) {
    { m.rows() } -> std::convertible_to<int>;
    { m.cols() } -> std::convertible_to<int>;
    { m.cost(i, j) } -> std::convertible_to<double>;
};

/// Explicitly stored row-major cost matrix.
struct DenseCostMatrix {
    int nrows = 0, ncols = 0;
    std::vector<double> values;  // nrows * ncols

    DenseCostMatrix() = default;
    DenseCostMatrix(int r, int c, double fill = 0.0) : nrows(r), ncols(c), values(size_t(r) * c, fill) {}

    int rows() const { return nrows; }
    int cols() const { return ncols; }
    double cost(int i, int j) const { return values[size_t(i) * ncols + j]; }
    double& at(int i, int j) { return values[size_t(i) * ncols + j]; }
};

/// Implicit cost matrix over two point sets: cost(i,j) is the squared
/// Euclidean distance between source i and target j. Nothing is materialized,
/// so dense solves at a few thousand points stay within memory.
template <class PointT>
struct GeometricCost {
    std::span<const PointT> sources;
    std::span<const PointT> targets;

    int rows() const { return int(sources.size()); }
    int cols() const { return int(targets.size()); }
    double cost(int i, int j) const { return dist2(sources[i], targets[j]); }
};

/// Per-row candidate edges in CSR layout, sorted ascending by (cost, column)
/// within each row.
struct SparseCandidates {
    int rows = 0, cols = 0;
    std::vector<uint32_t> offsets;  // rows + 1
    std::vector<int32_t> col;
    std::vector<double> cost;

    size_t edge_count() const { return col.size(); }

    /// Builds from per-row (column, cost) lists; sorts each row.
    static SparseCandidates from_rows(int cols,
                                      const std::vector<std::vector<std::pair<int, double>>>& rows) {
        SparseCandidates c;
        c.rows = int(rows.size());
        c.cols = cols;
        c.offsets.assign(rows.size() + 1, 0);
        size_t total = 0;
        for (const auto& r : rows) total += r.size();
        c.col.reserve(total);
        c.cost.reserve(total);
        for (size_t i = 0; i < rows.size(); ++i) {
            auto sorted = rows[i];
            std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
                return a.second < b.second || (a.second == b.second && a.first < b.first);
            });
            for (const auto& [j, w] : sorted) {
                c.col.push_back(int32_t(j));
                c.cost.push_back(w);
            }
            c.offsets[i + 1] = uint32_t(c.col.size());
        }
        return c;
    }
};

namespace detail {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

/// Optimal assignment on a complete cost matrix, rows() <= cols().
/// Shortest augmenting paths with dual potentials; the column scan keeps the
/// lowest column index on distance ties, which pins down the returned
/// assignment among equal-cost optima.
template <CostMatrixLike M>
AssignmentResult solve_dense(const M& m) {
    const int n = m.rows(), cols = m.cols();
    if (n > cols) throw SizeMismatch("solve_dense: rows must not exceed cols");
    AssignmentResult res;
    res.row_to_col.assign(n, -1);
    if (n == 0) return res;

    // p[j] = row matched to column j; column `cols` is the virtual root that
    // temporarily holds the row being inserted.
    std::vector<int32_t> p(cols + 1, -1);
    std::vector<double> u(n, 0.0), v(cols + 1, 0.0), minv(cols);
    std::vector<int32_t> way(cols, -1);
    std::vector<char> used(cols + 1, 0);

    for (int i = 0; i < n; ++i) {
        p[cols] = i;
        int j0 = cols;
        std::fill(minv.begin(), minv.end(), detail::kInf);
        std::fill(used.begin(), used.end(), char(0));
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = detail::kInf;
            int j1 = -1;
            for (int j = 0; j < cols; ++j) {
                if (used[j]) continue;
                double cur = m.cost(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= cols; ++j) {
                if (used[j]) {
                    if (p[j] >= 0) u[p[j]] += delta;
                    v[j] -= delta;
                } else if (minv[j] < detail::kInf) {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != -1);
        // augment: flip matches backwards along the alternating path
        while (j0 != cols) {
            int j1 = way[j0];
            p[j0] = (j1 == cols) ? i : p[j1];
            j0 = j1;
        }
    }

    for (int j = 0; j < cols; ++j)
        if (p[j] >= 0) res.row_to_col[p[j]] = j;
    res.total_cost = 0.0;
    for (int i = 0; i < n; ++i) res.total_cost += m.cost(i, res.row_to_col[i]);
    return res;
}

/// Optimal assignment restricted to candidate edges. Throws
/// AssignmentInfeasible when the candidate graph has no matching that covers
/// every row.
inline AssignmentResult solve_sparse(const SparseCandidates& c) {
    const int n = c.rows, cols = c.cols;
    if (n > cols) throw SizeMismatch("solve_sparse: rows must not exceed cols");
    AssignmentResult res;
    res.row_to_col.assign(n, -1);
    if (n == 0) return res;

    std::vector<int32_t> row_match(n, -1), col_match(cols, -1);
    std::vector<double> u(n, 0.0), v(cols, 0.0);

    // Row duals start at each row's cheapest candidate, giving nonnegative
    // reduced costs with v = 0; a greedy pass then matches every row whose
    // cheapest columns include a free one (those edges are tight).
    for (int i = 0; i < n; ++i) {
        if (c.offsets[i + 1] == c.offsets[i])
            throw AssignmentInfeasible("solve_sparse: row has no candidates");
        u[i] = c.cost[c.offsets[i]];
    }
    for (int i = 0; i < n; ++i) {
        for (uint32_t e = c.offsets[i]; e < c.offsets[i + 1] && c.cost[e] == u[i]; ++e) {
            int j = c.col[e];
            if (col_match[j] < 0) {
                col_match[j] = i;
                row_match[i] = j;
                break;
            }
        }
    }

    // Dijkstra state, reset via the touched list rather than full clears.
    std::vector<double> dist(cols, detail::kInf);
    std::vector<int32_t> pred(cols, -1);  // previous column on the path, -1 = start row
    std::vector<char> settled(cols, 0);
    std::vector<int32_t> touched, order;
    using HeapItem = std::pair<double, int32_t>;
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<HeapItem>> heap;

    for (int r = 0; r < n; ++r) {
        if (row_match[r] >= 0) continue;
        for (int32_t j : touched) {
            dist[j] = detail::kInf;
            pred[j] = -1;
            settled[j] = 0;
        }
        touched.clear();
        order.clear();
        while (!heap.empty()) heap.pop();

        for (uint32_t e = c.offsets[r]; e < c.offsets[r + 1]; ++e) {
            int j = c.col[e];
            double d = c.cost[e] - u[r] - v[j];
            if (d < dist[j]) {
                if (dist[j] == detail::kInf) touched.push_back(j);
                dist[j] = d;
                pred[j] = -1;
                heap.emplace(d, j);
            }
        }

        int32_t final_col = -1;
        double final_dist = 0.0;
        while (!heap.empty()) {
            auto [d, j] = heap.top();
            heap.pop();
            if (settled[j]) continue;
            settled[j] = 1;
            order.push_back(j);
            if (col_match[j] < 0) {
                final_col = j;
                final_dist = d;
                break;
            }
            const int i2 = col_match[j];
            for (uint32_t e = c.offsets[i2]; e < c.offsets[i2 + 1]; ++e) {
                int j2 = c.col[e];
                if (settled[j2]) continue;
                double nd = d + c.cost[e] - u[i2] - v[j2];
                // guards against fp drift producing a non-monotone queue
                if (nd < d) nd = d;
                if (nd < dist[j2]) {
                    if (dist[j2] == detail::kInf) touched.push_back(j2);
                    dist[j2] = nd;
                    pred[j2] = j;
                    heap.emplace(nd, j2);
                }
            }
        }
        if (final_col < 0)
            throw AssignmentInfeasible("solve_sparse: no augmenting path for row " +
                                       std::to_string(r));

        // dual update over settled columns keeps reduced costs nonnegative
        // and path edges tight (uses pre-augmentation matches)
        for (int32_t j : order) {
            if (j == final_col) continue;
            v[j] += dist[j] - final_dist;
            u[col_match[j]] += final_dist - dist[j];
        }
        u[r] += final_dist;

        // augment along the predecessor chain
        int32_t j = final_col;
        for (;;) {
            int32_t jp = pred[j];
            if (jp < 0) {
                col_match[j] = r;
                row_match[r] = j;
                break;
            }
            int32_t i2 = col_match[jp];
            col_match[j] = i2;
            row_match[i2] = j;
            j = jp;
        }
    }

    for (int i = 0; i < n; ++i) res.row_to_col[i] = row_match[i];
    // recompute from candidate costs so total_cost matches the edge weights
    res.total_cost = 0.0;
    for (int i = 0; i < n; ++i) {
        double w = detail::kInf;
        for (uint32_t e = c.offsets[i]; e < c.offsets[i + 1]; ++e) {
            if (c.col[e] == row_match[i]) {
                w = c.cost[e];
                break;
            }
        }
        res.total_cost += w;
    }
    return res;
}

/// k nearest targets per source under squared Euclidean distance, via a k-d
/// tree. Candidates come out sorted ascending by (cost, column).
template <class PointT>
SparseCandidates build_knn_candidates(std::span<const PointT> sources,
                                      std::span<const PointT> targets, int k) {
    if (k < 1) throw Error("build_knn_candidates: k must be >= 1");
    if (targets.empty()) throw Error("build_knn_candidates: no targets");
    constexpr int DIM = std::same_as<PointT, Vec2> ? 2 : 3;
    KdTree<DIM> tree(targets);

    SparseCandidates c;
    c.rows = int(sources.size());
    c.cols = int(targets.size());
    const int keff = std::min<int>(k, int(targets.size()));
    c.offsets.assign(sources.size() + 1, 0);
    c.col.resize(sources.size() * size_t(keff));
    c.cost.resize(sources.size() * size_t(keff));

    std::vector<std::pair<double, int>> nn;
    for (size_t i = 0; i < sources.size(); ++i) {
        tree.knn(KdTree<DIM>::make_point(sources[i]), keff, nn);
        size_t base = i * size_t(keff);
        for (int e = 0; e < keff; ++e) {
            c.col[base + e] = int32_t(nn[e].second);
            c.cost[base + e] = nn[e].first;
        }
        c.offsets[i + 1] = uint32_t(base + keff);
    }
    return c;
}

/// Maximum instance size for the dense fallback after sparse escalation has
/// been exhausted; larger infeasible instances are reported to the caller,
/// which discards the sample.
constexpr int kDenseFallbackMaxRows = 4096;

/// Sparse solve with k = k0, doubling k on infeasibility up to k_max, then a
/// dense solve when the instance is small enough. Cost model is squared
/// Euclidean distance throughout.
template <class PointT>
AssignmentResult escalate_and_solve(std::span<const PointT> sources,
                                    std::span<const PointT> targets, int k0, int k_max) {
    if (k0 < 1) throw Error("escalate_and_solve: k0 must be >= 1");
    if (sources.size() > targets.size())
        throw SizeMismatch("escalate_and_solve: more sources than targets");
    const int n_targets = int(targets.size());

    int k = k0;
    for (;;) {
        int keff = std::min(k, n_targets);
        try {
            return solve_sparse(build_knn_candidates(sources, targets, keff));
        } catch (const AssignmentInfeasible&) {
        }
        if (keff == n_targets) break;  // complete graph attempted; nothing denser to try
        if (k >= k_max) break;
        k = std::min(k * 2, k_max);
    }

    if (int(sources.size()) <= kDenseFallbackMaxRows) {
        GeometricCost<PointT> cost{sources, targets};
        return solve_dense(cost);
    }
    throw AssignmentInfeasible("assignment infeasible after k escalation to " +
                               std::to_string(k_max) + " on " + std::to_string(sources.size()) +
                               " rows");
}

}  // namespace satlas
