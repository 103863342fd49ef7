// Bivariate generalised Gaussian density with trace-2 covariance, sampler,
// and the constrained maximum-likelihood estimator of (p, phi, rho, m).
//
//   P(x) = p / (2 pi Gamma(2/p) 2^{2/p} m |Sigma|^{1/2})
//          * exp(-(x^T Sigma^{-1} x)^{p/2} / (2 m^{p/2}))
//
// The scale m is profiled out in closed form, leaving a three-parameter
// objective F(p, phi, rho) that is minimised over a compact box.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "dtvp/core.hpp"
#include "dtvp/operators.hpp"
#include "dtvp/optimize.hpp"
#include "dtvp/parallel.hpp"

namespace dtvp {

struct SampleSet {
  std::vector<Vec2> x;

  std::size_t size() const { return x.size(); }
};

struct EstimatorConfig {
  double p_min = 0.1;
  double p_max = 2.0;
  double rho_cap = 1.0 - 1e-6;
  int n_p = 8;
  int n_phi = 16;
  int n_rho = 8;
  double refine_tol = 1e-6;
  int max_evals = 500;
  double degeneracy_tol = 1e-6;

  void validate() const {
    if (!(p_min > 0.0 && p_min < p_max)) throw domain_error("need 0 < p_min < p_max");
    if (!(rho_cap > 0.0 && rho_cap < 1.0)) throw domain_error("need 0 < rho_cap < 1");
    if (n_p < 2 || n_phi < 2 || n_rho < 2) throw domain_error("grid sizes must be >= 2");
    if (!(refine_tol > 0.0 && degeneracy_tol > 0.0)) throw domain_error("tolerances must be > 0");
    if (max_evals < 1) throw domain_error("max_evals must be >= 1");
  }
};

inline void check_params(const BggdParams& bp) {
  if (!(bp.p > 0.0)) throw domain_error("p must be positive");
  if (!(bp.m > 0.0)) throw domain_error("m must be positive");
  check_rho(bp.rho);
}

/// Bivariate generalised Gaussian density.
inline double bggd_pdf(Vec2 x, const BggdParams& bp) {
  check_params(bp);
  const auto cov = sigma_from_polar(bp.rho, bp.phi);
  const double q = cov.inverse.quad(x);
  const double log_norm = std::log(bp.p) - std::log(2.0 * std::numbers::pi) - std::lgamma(2.0 / bp.p) -
                          (2.0 / bp.p) * std::numbers::ln2 - std::log(bp.m) -
                          0.5 * std::log(cov.sigma.det());
  return std::exp(log_norm - std::pow(q, 0.5 * bp.p) / (2.0 * std::pow(bp.m, 0.5 * bp.p)));
}

/// Draws N samples: x = R Sigma^{1/2} u with u uniform on the unit circle and
/// R^p ~ Gamma(shape 2/p, scale 2 m^{p/2}).
inline SampleSet sample_bggd(const BggdParams& bp, std::size_t n, std::uint64_t seed) {
  check_params(bp);
  const AnisotropyWeights w = weights_from_polar(bp.rho, bp.phi);
  const Sym2 root = compose(std::sqrt(w.e1), std::sqrt(w.e2), w.theta);
  std::mt19937_64 gen(seed);
  std::gamma_distribution<double> radial(2.0 / bp.p, 2.0 * std::pow(bp.m, 0.5 * bp.p));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  SampleSet out;
  out.x.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = std::pow(radial(gen), 1.0 / bp.p);
    const double a = angle(gen);
    out.x.push_back(r * root.apply({std::cos(a), std::sin(a)}));
  }
  return out;
}

/// Singular-value ratio test on the 2 x N sample matrix: true when all
/// samples lie (numerically) on one line through the origin.
inline bool detect_degenerate(const SampleSet& s, double tol) {
  Sym2 gram{0.0, 0.0, 0.0};
  for (const Vec2& v : s.x) {
    gram.xx += v.x * v.x;
    gram.xy += v.x * v.y;
    gram.yy += v.y * v.y;
  }
  const SymEigen e = eigen(gram);
  if (!(e.large > 0.0)) return true;
  return std::sqrt(std::max(e.small, 0.0) / e.large) < tol;
}

/// Closed-form scale minimiser m* = ((p / 4N) sum (x^T Sigma^{-1} x)^{p/2})^{2/p}.
inline double scale_mle(double p, const Sym2& sigma_inv, const SampleSet& s) {
  if (!(p > 0.0)) throw domain_error("p must be positive");
  if (s.size() == 0) throw domain_error("empty sample set");
  double sum = 0.0;
  for (const Vec2& v : s.x) sum += std::pow(sigma_inv.quad(v), 0.5 * p);
  if (!(sum > 0.0)) throw domain_error("scale undefined: all samples are zero");
  const double n = static_cast<double>(s.size());
  return std::exp((2.0 / p) * std::log(p / (4.0 * n) * sum));
}

/// Negative log-likelihood at (p, Sigma, m), no profiling.
inline double neg_log_likelihood_full(const BggdParams& bp, const SampleSet& s) {
  double f = 0.0;
  for (const Vec2& v : s.x) f -= std::log(bggd_pdf(v, bp));
  return f;
}

namespace detail {

/// Per-sample quadratic terms so that
/// (1 - rho^2) x^T Sigma^{-1} x = sq + rho cos(phi) dq - rho sin(phi) cq.
struct SampleTerms {
  std::vector<double> sq, dq, cq;
  double n = 0.0;

  explicit SampleTerms(const SampleSet& s) : n(static_cast<double>(s.size())) {
    sq.reserve(s.size());
    dq.reserve(s.size());
    cq.reserve(s.size());
    for (const Vec2& v : s.x) {
      sq.push_back(v.x * v.x + v.y * v.y);
      dq.push_back(v.x * v.x - v.y * v.y);
      cq.push_back(2.0 * v.x * v.y);
    }
  }

  /// log of the scaled quadratic form for every sample, and its maximum.
  double log_forms(double phi, double rho, std::vector<double>& out) const {
    const double a = rho * std::cos(phi);
    const double b = rho * std::sin(phi);
    out.resize(sq.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < sq.size(); ++j) {
      // clamp: rounding can push a zero form slightly negative
      out[j] = std::log(std::max(sq[j] + a * dq[j] - b * cq[j], 0.0));
      top = std::max(top, out[j]);
    }
    return top;
  }
};

/// F given log-forms; log sum w^{p/2} is accumulated relative to the max
/// so that extreme p or tiny gradients cannot underflow the sum.
inline double objective_from_logs(double p, double rho, const std::vector<double>& logw, double top,
                                  double n) {
  double acc = 0.0;
  const double half_p = 0.5 * p;
  for (double lw : logw) acc += std::exp(half_p * (lw - top));
  const double log_sum = half_p * top + std::log(acc);
  return n * (std::log(std::numbers::pi) + std::lgamma(2.0 / p + 1.0) + (2.0 / p) * std::numbers::ln2) -
         0.5 * n * std::log1p(-rho * rho) + (2.0 * n / p) * (std::log(p / (4.0 * n)) + log_sum) +
         2.0 * n / p;
}

}  // namespace detail

/// Profile negative log-likelihood F(p, phi, rho) with m = m*(p, Sigma).
inline double neg_log_likelihood(double p, double phi, double rho, const SampleSet& s) {
  if (!(p > 0.0)) throw domain_error("p must be positive");
  check_rho(rho);
  const detail::SampleTerms terms(s);
  std::vector<double> logw;
  const double top = terms.log_forms(phi, rho, logw);
  return detail::objective_from_logs(p, rho, logw, top, terms.n);
}

struct EstimateResult {
  BggdParams params;
  double objective = 0.0;       ///< F at the returned point
  double best_grid_objective = 0.0;
  int evaluations = 0;
};

/// Coarse grid over [p_min,p_max] x [0,2pi) x [0,rho_cap], then box-projected
/// Nelder-Mead from the three best grid nodes. The returned objective is
/// never larger than the best grid value.
inline EstimateResult estimate_detailed(const SampleSet& s, const EstimatorConfig& cfg) {
  cfg.validate();
  if (s.size() < 2) throw domain_error("need at least two samples");
  if (detect_degenerate(s, cfg.degeneracy_tol))
    throw estimation_error("degenerate samples: all gradients lie on one line through the origin");

  const detail::SampleTerms terms(s);
  std::vector<double> logw;

  struct Node {
    double f, p, phi, rho;
  };
  std::array<Node, 3> top3;
  top3.fill({std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0});
  auto offer = [&](const Node& nd) {
    for (std::size_t k = 0; k < top3.size(); ++k)
      if (nd.f < top3[k].f) {
        for (std::size_t j = top3.size() - 1; j > k; --j) top3[j] = top3[j - 1];
        top3[k] = nd;
        return;
      }
  };

  const double dp = (cfg.p_max - cfg.p_min) / (cfg.n_p - 1);
  const double dphi = 2.0 * std::numbers::pi / cfg.n_phi;
  const double drho = cfg.rho_cap / (cfg.n_rho - 1);
  int evals = 0;
  for (int ir = 0; ir < cfg.n_rho; ++ir) {
    const double rho = ir * drho;
    // phi is irrelevant at rho = 0
    const int nphi = ir == 0 ? 1 : cfg.n_phi;
    for (int ia = 0; ia < nphi; ++ia) {
      const double phi = ia * dphi;
      const double top = terms.log_forms(phi, rho, logw);
      for (int ip = 0; ip < cfg.n_p; ++ip) {
        const double p = cfg.p_min + ip * dp;
        offer({detail::objective_from_logs(p, rho, logw, top, terms.n), p, phi, rho});
        ++evals;
      }
    }
  }

  EstimateResult res;
  res.best_grid_objective = top3[0].f;
  Node best = top3[0];

  auto objective = [&](const std::array<double, 3>& x) {
    const double top = terms.log_forms(x[1], x[2], logw);
    return detail::objective_from_logs(x[0], x[2], logw, top, terms.n);
  };
  const std::array<double, 3> lower{cfg.p_min, -std::numeric_limits<double>::infinity(), 0.0};
  const std::array<double, 3> upper{cfg.p_max, std::numeric_limits<double>::infinity(), cfg.rho_cap};
  const std::array<double, 3> step{0.5 * dp, 0.5 * dphi, 0.5 * drho};
  for (const Node& start : top3) {
    if (!std::isfinite(start.f)) continue;
    const auto r = opt::nelder_mead_box<3>(objective, {start.p, start.phi, start.rho}, step, lower,
                                           upper, cfg.refine_tol, cfg.max_evals, cfg.refine_tol);
    evals += r.evals;
    if (r.f < best.f) best = {r.f, r.x[0], r.x[1], r.x[2]};
  }

  res.params.p = best.p;
  res.params.rho = best.rho;
  res.params.phi = wrap_angle(best.phi, 2.0 * std::numbers::pi);
  res.params.m = scale_mle(best.p, sigma_from_polar(best.rho, best.phi).inverse, s);
  res.objective = best.f;
  res.evaluations = evals;
  return res;
}

inline BggdParams estimate(const SampleSet& s, const EstimatorConfig& cfg) {
  return estimate_detailed(s, cfg).params;
}

/// Isotropic Gaussian parameters used where the neighbourhood is degenerate.
inline BggdParams isotropic_fallback(const SampleSet& s) {
  BggdParams bp{2.0, 0.0, 0.0, std::numeric_limits<double>::min()};
  bool any = false;
  for (const Vec2& v : s.x) any = any || v.x != 0.0 || v.y != 0.0;
  if (any) bp.m = scale_mle(2.0, Sym2{}, s);
  return bp;
}

/// Gathers the (2h+1)^2 periodic neighbourhood of gradient vectors around
/// pixel (row, col).
inline SampleSet neighbourhood(const GradientField& g, std::size_t row, std::size_t col, int half_width) {
  const auto w = static_cast<long>(g.width()), h = static_cast<long>(g.height());
  SampleSet s;
  s.x.reserve(static_cast<std::size_t>((2 * half_width + 1) * (2 * half_width + 1)));
  for (int dr = -half_width; dr <= half_width; ++dr)
    for (int dc = -half_width; dc <= half_width; ++dc) {
      const auto r = static_cast<std::size_t>(((static_cast<long>(row) + dr) % h + h) % h);
      const auto c = static_cast<std::size_t>(((static_cast<long>(col) + dc) % w + w) % w);
      const std::size_t i = r * g.width() + c;
      s.x.push_back(g.at(i));
    }
  return s;
}

/// Per-pixel ML estimation over sliding neighbourhoods of central-difference
/// gradients. Pixels are independent, so the result does not depend on the
/// thread schedule.
inline ParamMaps estimate_maps(const Image& image, int half_width, const EstimatorConfig& cfg) {
  cfg.validate();
  if (half_width < 0 || (2 * half_width + 1) * (2 * half_width + 1) < 4)
    throw domain_error("neighbourhood must contain at least 4 pixels");
  if (!all_finite(image)) throw domain_error("image contains non-finite values");
  const GradientField g = grad_central(image);
  ParamMaps maps(image.width(), image.height());
  parallel_for(maps.size(), [&](std::size_t i) {
    const SampleSet s = neighbourhood(g, i / image.width(), i % image.width(), half_width);
    if (detect_degenerate(s, cfg.degeneracy_tol))
      maps.set(i, isotropic_fallback(s));
    else
      maps.set(i, estimate(s, cfg));
  });
  return maps;
}

}  // namespace dtvp
