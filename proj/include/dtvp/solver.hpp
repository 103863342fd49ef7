// ADMM for the DTV_p^sv-L2 model with the regularisation parameter mu
// selected on the fly by the discrepancy principle ||Ku - g|| <= tau sigma sqrt(n).
//
// Splitting: r = Ku - g, t = Du. Per iteration
//   u  <- spectral solve of the normal equations
//   r, mu <- projection of w = Ku - g + rho_r/beta_r onto the delta-ball
//   t  <- per-pixel prox of (t^T A_i t)^{p_i/2}
//   rho_r, rho_t <- dual ascent
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "dtvp/core.hpp"
#include "dtvp/operators.hpp"
#include "dtvp/parallel.hpp"
#include "dtvp/prox.hpp"

namespace dtvp {

struct SolverConfig {
  double tau = 1.01;
  double beta_r = 10.0;
  double beta_t = 10.0;
  int max_iters = 500;
  double stop_tol = 1e-4;
  int warmup_iters = 5;
  ProxConfig prox;

  void validate() const {
    if (!(tau >= 1.0)) throw domain_error("tau must be >= 1");
    if (!(beta_r > 0.0 && beta_t > 0.0)) throw domain_error("penalty parameters must be positive");
    if (!(stop_tol > 0.0)) throw domain_error("stop_tol must be positive");
    if (max_iters < 0 || warmup_iters < 0) throw domain_error("iteration counts must be >= 0");
  }
};

struct AdmmState {
  Image u;
  Image r;
  GradientField t;
  Image rho_r;
  GradientField rho_t;
  double mu = 0.0;
  int k = 0;
};

struct TraceRow {
  int iter;
  double rel_change;
  double data_fit;  ///< ||Ku - g||
  double mu;
  double res_t;     ///< ||t - Du||
  double res_r;     ///< ||r - (Ku - g)||
};

struct RestoreResult {
  Image u;
  std::vector<TraceRow> trace;
  bool converged = false;
  double delta = 0.0;
  AdmmState state;
};

struct RUpdate {
  Image r;
  double mu;
};

/// Joint (r, mu) update: mu = 0 and r = w inside the delta-ball, otherwise
/// mu = beta_r (||w||/delta - 1) and r = delta w / ||w||.
inline RUpdate r_update(const Image& w, double delta, double beta_r) {
  const double nw = l2_norm(w);
  if (nw <= delta) return {w, 0.0};
  if (delta <= 0.0) return {Image(w.width(), w.height()), std::numeric_limits<double>::infinity()};
  return {(delta / nw) * w, beta_r * (nw / delta - 1.0)};
}

/// t_i = prox of (t^T A_i t)^{p_i/2} with penalty beta_t at q_i = (Du)_i + (rho_t)_i / beta_t.
inline GradientField t_update(const GradientField& du, const GradientField& rho_t, double beta_t,
                              const ParamMaps& maps, const ProxConfig& cfg = {}) {
  if (!maps.matches(du.gx) || !rho_t.same_shape(du.gx)) throw domain_error("t_update shape mismatch");
  GradientField t(du.width(), du.height());
  parallel_for(du.size(), [&](std::size_t i) {
    const Vec2 q = du.at(i) + (1.0 / beta_t) * rho_t.at(i);
    const ProxProblem prob{q, precision_matrix(maps.weights[i]), maps.params[i].p, beta_t};
    t.set(i, prox_dtv(prob, cfg));
  });
  return t;
}

inline GradientField t_update(const Image& u_new, const GradientField& rho_t, double beta_t,
                              const ParamMaps& maps, const ProxConfig& cfg = {}) {
  return t_update(grad_forward(u_new), rho_t, beta_t, maps, cfg);
}

/// rho_r -= beta_r (r - (Ku - g)), rho_t -= beta_t (t - Du).
inline void dual_update(AdmmState& state, const Image& ku_minus_g, const GradientField& du,
                        const SolverConfig& cfg) {
  for (std::size_t i = 0; i < state.rho_r.size(); ++i)
    state.rho_r[i] -= cfg.beta_r * (state.r[i] - ku_minus_g[i]);
  for (std::size_t i = 0; i < state.rho_t.size(); ++i) {
    state.rho_t.gx[i] -= cfg.beta_t * (state.t.gx[i] - du.gx[i]);
    state.rho_t.gy[i] -= cfg.beta_t * (state.t.gy[i] - du.gy[i]);
  }
}

inline bool finite_state(const AdmmState& s) {
  return all_finite(s.u) && all_finite(s.r) && all_finite(s.t.gx) && all_finite(s.t.gy) &&
         all_finite(s.rho_r) && all_finite(s.rho_t.gx) && all_finite(s.rho_t.gy);
}

inline RestoreResult restore(const Image& g, const PsfSpec& psf, double sigma_noise, const ParamMaps& maps,
                             const SolverConfig& cfg) {
  cfg.validate();
  if (!maps.matches(g)) throw domain_error("parameter maps do not match the image shape");
  if (!(sigma_noise > 0.0)) throw domain_error("noise sigma must be positive");
  if (!all_finite(g)) throw domain_error("observed image contains non-finite values");

  const SpectralCache cache(g.width(), g.height(), psf);
  RestoreResult res;
  res.delta = cfg.tau * sigma_noise * std::sqrt(static_cast<double>(g.size()));

  AdmmState& st = res.state;
  st.u = g;
  st.r = blur_apply(g, cache) - g;
  st.t = grad_forward(g);
  st.rho_r = Image(g.width(), g.height());
  st.rho_t = GradientField(g.width(), g.height());

  const double inv_br = 1.0 / cfg.beta_r, inv_bt = 1.0 / cfg.beta_t;
  for (st.k = 0; st.k < cfg.max_iters;) {
    GradientField t_shift(g.width(), g.height());
    Image r_shift(g.width(), g.height());
    for (std::size_t i = 0; i < g.size(); ++i) {
      t_shift.gx[i] = st.t.gx[i] - inv_bt * st.rho_t.gx[i];
      t_shift.gy[i] = st.t.gy[i] - inv_bt * st.rho_t.gy[i];
      r_shift[i] = st.r[i] - inv_br * st.rho_r[i];
    }
    Image u_new = u_solve(t_shift, r_shift, g, cfg.beta_r, cfg.beta_t, cache);

    const Image residual = blur_apply(u_new, cache) - g;
    Image w = residual;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += inv_br * st.rho_r[i];
    RUpdate ru = r_update(w, res.delta, cfg.beta_r);
    st.r = std::move(ru.r);
    st.mu = ru.mu;

    const GradientField du = grad_forward(u_new);
    st.t = t_update(du, st.rho_t, cfg.beta_t, maps, cfg.prox);
    dual_update(st, residual, du, cfg);

    const double prev_norm = l2_norm(st.u);
    const double rel = l2_norm(u_new - st.u) / (prev_norm > 0.0 ? prev_norm : 1.0);
    st.u = std::move(u_new);
    ++st.k;
    res.trace.push_back({st.k, rel, l2_norm(residual), st.mu, l2_norm(st.t - du),
                         l2_norm(st.r - residual)});
    if (!finite_state(st) || !std::isfinite(rel)) throw numerical_error("non-finite ADMM state", st.k);
    // u^(1) = g exactly (the initial t, r are consistent with u^(0) = g), so
    // the relative change only carries information from the second step on
    if (st.k > 1 && rel < cfg.stop_tol) {
      res.converged = true;
      break;
    }
  }
  res.u = st.u;
  return res;
}

/// A few iterations of the isotropic TV-L2 model (p = 1, Lambda = I). The
/// result is the input to parameter-map estimation.
inline Image restore_tv_warmup(const Image& g, const PsfSpec& psf, double sigma_noise,
                               const SolverConfig& cfg) {
  SolverConfig warm = cfg;
  warm.max_iters = cfg.warmup_iters;
  return restore(g, psf, sigma_noise, ParamMaps::uniform(g.width(), g.height(), 1.0), warm).u;
}

}  // namespace dtvp
