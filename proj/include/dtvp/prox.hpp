// Proximal map of f(t) = (t^T A t)^{p/2} on R^2, for any p > 0:
//
//   prox(q) in argmin_t  (t^T A t)^{p/2} + (beta/2) ||t - q||^2.
//
// After rotating into the eigenbasis of A and folding signs into the first
// quadrant, every global minimiser lies on the arc of a rectangular
// hyperbola joining the origin to |q~|. Parametrising the arc by its first
// coordinate turns the problem into a bounded scalar minimisation.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dtvp/core.hpp"
#include "dtvp/optimize.hpp"

namespace dtvp {

struct ProxProblem {
  Vec2 q;
  Sym2 A;
  double p = 1.0;
  double beta = 1.0;
};

struct ProxConfig {
  double kappa_iso_tol = 1.0 + 1e-9;
  int n_grid_1d = 64;
  double tol_1d = 1e-10;
};

inline double prox_objective(const ProxProblem& prob, Vec2 t) {
  const double quad = std::max(prob.A.quad(t), 0.0);
  const Vec2 d = t - prob.q;
  return std::pow(quad, 0.5 * prob.p) + 0.5 * prob.beta * dot(d, d);
}

/// Global minimiser of a scalar function on [lo, hi]: uniform seed grid
/// (endpoints included), golden-section refinement of every discrete local
/// minimum, best candidate wins. Ties resolve toward the smaller abscissa.
template <typename H>
double solve_1d(H&& h, double lo, double hi, const ProxConfig& cfg) {
  if (!(hi > lo)) return lo;
  const int n = std::max(cfg.n_grid_1d, 2);
  std::vector<double> xs(static_cast<std::size_t>(n)), fs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // last node pinned to hi exactly
    xs[static_cast<std::size_t>(i)] = i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1);
    fs[static_cast<std::size_t>(i)] = h(xs[static_cast<std::size_t>(i)]);
  }

  double best_x = xs[0];
  double best_f = fs[0];
  auto consider = [&](double x, double f) {
    if (f < best_f || (f == best_f && x < best_x)) {
      best_x = x;
      best_f = f;
    }
  };
  for (int i = 1; i < n; ++i) consider(xs[static_cast<std::size_t>(i)], fs[static_cast<std::size_t>(i)]);

  const double tol = cfg.tol_1d * (hi - lo);
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const bool left_ok = i == 0 || fs[k] <= fs[k - 1];
    const bool right_ok = i == n - 1 || fs[k] <= fs[k + 1];
    if (!(left_ok && right_ok)) continue;
    const double a = xs[i == 0 ? k : k - 1];
    const double b = xs[i == n - 1 ? k : k + 1];
    const auto r = opt::golden_section(h, a, b, tol);
    consider(r.x, r.f);
  }
  return best_x;
}

namespace detail {

inline double sign_or_one(double v) { return v < 0.0 ? -1.0 : 1.0; }

/// argmin over rho in [0, r] of c rho^p + (beta/2)(rho - r)^2.
inline double radial_prox(double c, double p, double beta, double r, const ProxConfig& cfg) {
  if (r == 0.0) return 0.0;
  return solve_1d([&](double x) { return c * std::pow(x, p) + 0.5 * beta * (x - r) * (x - r); }, 0.0,
                  r, cfg);
}

}  // namespace detail

/// Point on the hyperbola arc (z1 - c1)(z2 - c2) = c1 c2 with first
/// coordinate xi, c1 = -qbar1/(kappa-1), c2 = kappa qbar2/(kappa-1).
/// Written as kappa qbar2 xi / ((kappa-1) xi + qbar1), equal to
/// c2 xi / (xi - c1) but without the 1/(kappa-1) blow-up near kappa = 1.
inline double hyperbola_z2(double xi, double kappa, double qbar1, double qbar2) {
  return kappa * qbar2 * xi / ((kappa - 1.0) * xi + qbar1);
}

/// Details of one anisotropic solve, exposed for feasibility checks.
struct ProxTrace {
  bool isotropic = false;
  bool axis = false;
  bool closed_form = false;  ///< p == 2, solved as a linear system
  double kappa = 1.0;
  Vec2 qbar;   ///< |V q|
  Vec2 z;      ///< minimiser in the folded eigen-frame
  Vec2 t;      ///< result in the original frame
};

inline ProxTrace prox_dtv_traced(const ProxProblem& prob, const ProxConfig& cfg) {
  const Sym2& A = prob.A;
  if (!(prob.p > 0.0) || !(prob.beta > 0.0)) throw domain_error("prox requires p > 0 and beta > 0");
  const SymEigen e = eigen(A);
  if (!(e.small > 0.0) || !std::isfinite(e.large)) throw domain_error("prox matrix must be SPD");

  ProxTrace tr;
  if (prob.q.x == 0.0 && prob.q.y == 0.0) return tr;

  tr.kappa = e.large / e.small;
  const double half_p = 0.5 * prob.p;

  if (prob.p == 2.0) {
    // quadratic: (2A + beta I) t = beta q
    const Sym2 M{2.0 * A.xx + prob.beta, 2.0 * A.xy, 2.0 * A.yy + prob.beta};
    const double det = M.det();
    tr.closed_form = true;
    tr.t = {prob.beta * (M.yy * prob.q.x - M.xy * prob.q.y) / det,
            prob.beta * (M.xx * prob.q.y - M.xy * prob.q.x) / det};
    return tr;
  }

  if (tr.kappa <= cfg.kappa_iso_tol) {
    // f(t) = lambda^{p/2} ||t||^p: shrink along q
    tr.isotropic = true;
    const double r = norm(prob.q);
    const double rho = detail::radial_prox(std::pow(e.small, half_p), prob.p, prob.beta, r, cfg);
    tr.t = (rho / r) * prob.q;
    return tr;
  }

  // Rows of V are the eigenvectors (large first): qt = V q.
  const double c = std::cos(e.axis), s = std::sin(e.axis);
  const Vec2 qt{c * prob.q.x + s * prob.q.y, -s * prob.q.x + c * prob.q.y};
  const Vec2 sgn{detail::sign_or_one(qt.x), detail::sign_or_one(qt.y)};
  tr.qbar = {std::abs(qt.x), std::abs(qt.y)};
  const double kappa = tr.kappa;
  const double bbar = prob.beta / std::pow(e.small, half_p);

  // H(z) = (kappa z1^2 + z2^2)^{p/2} + (bbar/2) ||z - qbar||^2
  auto H = [&](double z1, double z2) {
    const double d1 = z1 - tr.qbar.x, d2 = z2 - tr.qbar.y;
    return std::pow(kappa * z1 * z1 + z2 * z2, half_p) + 0.5 * bbar * (d1 * d1 + d2 * d2);
  };

  if (tr.qbar.x == 0.0) {
    tr.axis = true;
    tr.z = {0.0, solve_1d([&](double x) { return H(0.0, x); }, 0.0, tr.qbar.y, cfg)};
  } else if (tr.qbar.y == 0.0) {
    tr.axis = true;
    tr.z = {solve_1d([&](double x) { return H(x, 0.0); }, 0.0, tr.qbar.x, cfg), 0.0};
  } else {
    auto on_arc = [&](double xi) { return H(xi, hyperbola_z2(xi, kappa, tr.qbar.x, tr.qbar.y)); };
    const double xi = solve_1d(on_arc, 0.0, tr.qbar.x, cfg);
    tr.z = {xi, std::min(hyperbola_z2(xi, kappa, tr.qbar.x, tr.qbar.y), tr.qbar.y)};
  }

  const Vec2 y{sgn.x * tr.z.x, sgn.y * tr.z.y};
  tr.t = {c * y.x - s * y.y, s * y.x + c * y.y};
  return tr;
}

/// A global minimiser of (t^T A t)^{p/2} + (beta/2)||t - q||^2.
inline Vec2 prox_dtv(const ProxProblem& prob, const ProxConfig& cfg = {}) {
  return prox_dtv_traced(prob, cfg).t;
}

/// Brute-force minimiser over a (grid_n x grid_n) lattice covering
/// [-extent, extent]^2. Test oracle.
inline Vec2 prox_oracle(const ProxProblem& prob, double extent, int grid_n) {
  Vec2 best{0.0, 0.0};
  double best_f = std::numeric_limits<double>::infinity();
  const double step = grid_n > 1 ? 2.0 * extent / (grid_n - 1) : 0.0;
  const double half_p = 0.5 * prob.p;
  for (int i = 0; i < grid_n; ++i) {
    const double x = -extent + i * step;
    for (int j = 0; j < grid_n; ++j) {
      const double y = -extent + j * step;
      const double quad = prob.A.xx * x * x + 2.0 * prob.A.xy * x * y + prob.A.yy * y * y;
      const double dx = x - prob.q.x, dy = y - prob.q.y;
      const double f = std::pow(std::max(quad, 0.0), half_p) + 0.5 * prob.beta * (dx * dx + dy * dy);
      if (f < best_f) {
        best_f = f;
        best = {x, y};
      }
    }
  }
  return best;
}

}  // namespace dtvp
