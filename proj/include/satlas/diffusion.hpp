#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "satlas/core.hpp"
#include "satlas/mesh.hpp"
#include "satlas/metrics.hpp"
#include "satlas/point_cloud.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Closed-form diffusion algebra under the velocity parameterization — the
// verifiable math a training stack would sit on, with no network attached.
// Everything is float64 and elementwise:
//   forward:   x_t   = alpha_t * x0 + sigma_t * eps
//   velocity:  v_t   = alpha_t * eps - sigma_t * x0
//   recovery:  x0but = alpha_t * x_t - sigma_t * v_t   (exact: alpha^2+sigma^2=1)
// The recovery identity is what lets geometric losses see a clean point cloud
// at every timestep.
// ---------------------------------------------------------------------------

using AtlasTensor = std::vector<double>;

struct NoiseSchedule {
    std::vector<double> betas;      // per-step noise rates in [0, 1]
    std::vector<double> alpha_bar;  // cumulative products of (1 - beta)
    std::vector<double> alpha;      // sqrt(alpha_bar)
    std::vector<double> sigma;      // sqrt(1 - alpha_bar)

    int steps() const { return int(betas.size()); }

    /// Builds the derived tables from `betas`. Betas are validated to [0, 1]
    /// (inclusive ends, so degenerate identity/pure-noise schedules are
    /// expressible); alpha_bar is non-increasing by construction.
    static NoiseSchedule from_betas(std::vector<double> betas) {
        if (betas.empty()) throw ConfigError("noise schedule needs at least one step");
        NoiseSchedule s;
        s.betas = std::move(betas);
        s.alpha_bar.resize(s.betas.size());
        s.alpha.resize(s.betas.size());
        s.sigma.resize(s.betas.size());
        double prod = 1.0;
        for (size_t t = 0; t < s.betas.size(); ++t) {
            double b = s.betas[t];
            if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("beta out of [0, 1] at step " + std::to_string(t));
            prod *= 1.0 - b;
            s.alpha_bar[t] = prod;
            s.alpha[t] = std::sqrt(prod);
            s.sigma[t] = std::sqrt(1.0 - prod);
        }
        return s;
    }

    /// The usual linear-beta schedule (defaults: 1e-4 to 2e-2 over 1000
    /// steps).
    static NoiseSchedule linear(int T = 1000, double beta_start = 1e-4, double beta_end = 2e-2) {
        if (T < 1) throw ConfigError("noise schedule needs at least one step");
        std::vector<double> betas(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t) {
            double frac = T == 1 ? 0.0 : double(t) / double(T - 1);
            betas[size_t(t)] = beta_start + (beta_end - beta_start) * frac;
        }
        return from_betas(std::move(betas));
    }

    void check_step(int t) const {
        if (t < 0 || t >= steps()) throw ConfigError("timestep out of range");
    }
};

namespace detail {
inline void check_same_shape(const AtlasTensor& a, const AtlasTensor& b, const char* what) {
    if (a.size() != b.size()) throw ShapeMismatch(std::string(what) + ": tensor shapes differ");
}
}  // namespace detail

/// x_t = alpha_t * x0 + sigma_t * eps
inline AtlasTensor forward_sample(const AtlasTensor& x0, const AtlasTensor& eps,
                                  const NoiseSchedule& sched, int t) {
    detail::check_same_shape(x0, eps, "forward_sample");
    sched.check_step(t);
    const double a = sched.alpha[size_t(t)], s = sched.sigma[size_t(t)];
    AtlasTensor xt(x0.size());
    for (size_t i = 0; i < x0.size(); ++i) xt[i] = a * x0[i] + s * eps[i];
    return xt;
}

/// v_t = alpha_t * eps - sigma_t * x0
inline AtlasTensor velocity_target(const AtlasTensor& x0, const AtlasTensor& eps,
                                   const NoiseSchedule& sched, int t) {
    detail::check_same_shape(x0, eps, "velocity_target");
    sched.check_step(t);
    const double a = sched.alpha[size_t(t)], s = sched.sigma[size_t(t)];
    AtlasTensor v(x0.size());
    for (size_t i = 0; i < x0.size(); ++i) v[i] = a * eps[i] - s * x0[i];
    return v;
}

/// x0hat = alpha_t * x_t - sigma_t * v  (exact inverse of the pair above)
inline AtlasTensor reconstruct_x0(const AtlasTensor& xt, const AtlasTensor& v,
                                  const NoiseSchedule& sched, int t) {
    detail::check_same_shape(xt, v, "reconstruct_x0");
    sched.check_step(t);
    const double a = sched.alpha[size_t(t)], s = sched.sigma[size_t(t)];
    AtlasTensor x0(xt.size());
    for (size_t i = 0; i < xt.size(); ++i) x0[i] = a * xt[i] - s * v[i];
    return x0;
}

/// Mean squared error over entries.
inline double denoise_loss(const AtlasTensor& v_pred, const AtlasTensor& v_target) {
    detail::check_same_shape(v_pred, v_target, "denoise_loss");
    if (v_pred.empty()) throw ShapeMismatch("denoise_loss: empty tensors");
    double s = 0.0;
    for (size_t i = 0; i < v_pred.size(); ++i) {
        double d = v_pred[i] - v_target[i];
        s += d * d;
    }
    return s / double(v_pred.size());
}

struct CompositeWeights {
    double denoise = 1.0;  // never stated by the source method; unity default
    double cd = 0.05;
    double infocd = 0.2;
    double mesh = 100.0;
};

struct CompositeLoss {
    double total = 0.0;
    // raw metric values
    double denoise_raw = 0.0, cd_raw = 0.0, infocd_raw = 0.0, mesh_raw = 0.0;
    // weighted + time-scaled contributions (they sum to total)
    double denoise_term = 0.0, cd_term = 0.0, infocd_term = 0.0, mesh_term = 0.0;
    double time_scale = 1.0;  // 1 / (t + 1)
};

/// L = w_denoise * MSE(v_pred, v_target)
///   + 1/(t+1) * ( w_cd * CD_L1(p0hat, p_gt)
///               + w_infocd * InfoCD(p0hat, p_gt)
///               + w_mesh * PointToMesh(p0hat, M_gt) )
/// The geometric terms see the reconstructed cloud, discounted at late
/// (noisy) timesteps by the 1/(t+1) factor.
inline CompositeLoss composite_loss(const AtlasTensor& v_pred, const AtlasTensor& v_target,
                                    const PointCloud& p0_hat, const PointCloud& p_gt,
                                    const TriangleMesh& mesh_gt, int t,
                                    const CompositeWeights& w = {}) {
    if (t < 0) throw ConfigError("composite_loss: t must be >= 0");
    CompositeLoss out;
    out.time_scale = 1.0 / double(t + 1);
    out.denoise_raw = denoise_loss(v_pred, v_target);
    out.cd_raw = chamfer_l1(p0_hat, p_gt);
    out.infocd_raw = infocd(p0_hat, p_gt);
    out.mesh_raw = point_to_mesh(p0_hat, mesh_gt);
    out.denoise_term = w.denoise * out.denoise_raw;
    out.cd_term = out.time_scale * w.cd * out.cd_raw;
    out.infocd_term = out.time_scale * w.infocd * out.infocd_raw;
    out.mesh_term = out.time_scale * w.mesh * out.mesh_raw;
    out.total = out.denoise_term + out.cd_term + out.infocd_term + out.mesh_term;
    return out;
}

}  // namespace satlas
