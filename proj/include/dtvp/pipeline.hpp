// End-to-end workflows behind the CLI verbs: parameter-map estimation with
// TV warm-up, full restoration, the estimator benchmark and the prox sweep.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dtvp/bggd.hpp"
#include "dtvp/metrics.hpp"
#include "dtvp/prox.hpp"
#include "dtvp/solver.hpp"
#include "dtvp/synth.hpp"

namespace dtvp {

/// Warm-up (warmup_iters of TV-L2) followed by per-pixel ML estimation.
inline ParamMaps estimate_maps_pipeline(const Image& g, const PsfSpec& psf, double sigma_noise, int half_width,
                                        const SolverConfig& scfg, const EstimatorConfig& ecfg) {
  const Image base = scfg.warmup_iters > 0 ? restore_tv_warmup(g, psf, sigma_noise, scfg) : g;
  return estimate_maps(base, half_width, ecfg);
}

struct RestoreReport {
  RestoreResult result;
  ParamMaps maps;
  std::optional<double> isnr;
  std::optional<double> ssim;
  double data_fit = 0.0;
};

inline RestoreReport restore_pipeline(const Image& g, const PsfSpec& psf, double sigma_noise,
                                      std::optional<ParamMaps> maps, int half_width, const SolverConfig& scfg,
                                      const EstimatorConfig& ecfg, const Image* clean = nullptr) {
  RestoreReport rep;
  rep.maps = maps ? std::move(*maps) : estimate_maps_pipeline(g, psf, sigma_noise, half_width, scfg, ecfg);
  rep.result = restore(g, psf, sigma_noise, rep.maps, scfg);
  rep.data_fit = rep.result.trace.empty() ? 0.0 : rep.result.trace.back().data_fit;
  if (clean) {
    rep.isnr = isnr(g, *clean, rep.result.u);
    rep.ssim = ssim(*clean, rep.result.u);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// estimator benchmark

struct BenchTruth {
  double p = 1.0;
  double e1 = 1.4;
  double theta_deg = 45.0;
  double m = 0.3;
};

struct BenchRow {
  std::size_t n_samples;
  std::string param;
  double truth;
  EstimatorStats stats;
  double median;
};

/// Estimates for one sample size; angles in degrees, unwrapped to within
/// 90 degrees of the truth.
struct BenchRuns {
  std::size_t n_samples = 0;
  std::vector<double> p, e1, theta_deg, m;
  std::size_t degenerate = 0;
};

inline BenchRuns estimator_runs(const BenchTruth& truth, std::size_t n, int runs, std::uint64_t seed,
                                const EstimatorConfig& cfg) {
  const auto [rho, phi] = polar_from_axis(truth.e1, truth.theta_deg * std::numbers::pi / 180.0);
  const BggdParams bp{truth.p, phi, rho, truth.m};
  BenchRuns out;
  out.n_samples = n;
  for (int j = 0; j < runs; ++j) {
    const SampleSet s = sample_bggd(bp, n, derive_seed(seed, (static_cast<std::uint64_t>(n) << 20) + j));
    BggdParams est;
    try {
      est = estimate(s, cfg);
    } catch (const estimation_error&) {
      ++out.degenerate;
      continue;
    }
    const AnisotropyWeights w = weights_from_polar(est.rho, est.phi);
    double th = w.theta * 180.0 / std::numbers::pi;
    while (th - truth.theta_deg > 90.0) th -= 180.0;
    while (th - truth.theta_deg < -90.0) th += 180.0;
    out.p.push_back(est.p);
    out.e1.push_back(w.e1);
    out.theta_deg.push_back(th);
    out.m.push_back(est.m);
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw domain_error("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

inline std::vector<BenchRow> bench_rows(const BenchTruth& truth, const BenchRuns& runs) {
  std::vector<BenchRow> rows;
  auto add = [&](const char* name, const std::vector<double>& est, double t) {
    rows.push_back({runs.n_samples, name, t, estimator_stats(est, t, runs.n_samples), median(est)});
  };
  add("p", runs.p, truth.p);
  add("e1", runs.e1, truth.e1);
  add("theta", runs.theta_deg, truth.theta_deg);
  add("m", runs.m, truth.m);
  return rows;
}

inline std::vector<BenchRow> estimator_bench(const BenchTruth& truth, const std::vector<std::size_t>& sizes,
                                             int runs, std::uint64_t seed, const EstimatorConfig& cfg) {
  if (runs < 2) throw domain_error("estimator bench needs at least two runs per size");
  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    const auto r = bench_rows(truth, estimator_runs(truth, n, runs, seed, cfg));
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

// ---------------------------------------------------------------------------
// randomised prox-vs-oracle sweep

struct ProxCheckOptions {
  int n_problems = 500;
  std::uint64_t seed = 1;
  std::optional<double> fixed_p;
  int grid_n = 2001;
  double gap_tol = 1e-8;
};

struct ProxCheckReport {
  int n_problems = 0;
  int failures = 0;
  double max_gap = -std::numeric_limits<double>::infinity();  ///< max F(prox) - F(oracle)
  double max_closed_form_error = 0.0;  ///< p = 2 only
};

/// Random problem with p in [0.1, 2], kappa in [1, 50], beta in [0.1, 100],
/// ||q|| in [0, 10]; a share of cases is pinned to q = 0, kappa = 1 or q on
/// an eigen-axis.
inline ProxProblem random_prox_problem(std::mt19937_64& gen, std::optional<double> fixed_p = {}) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double p = fixed_p ? *fixed_p : 0.1 + 1.9 * u01(gen);
  const int kind = static_cast<int>(u01(gen) * 10.0);
  const double kappa = kind == 0 ? 1.0 : std::exp(std::log(50.0) * u01(gen));
  const double lambda2 = std::exp(std::log(0.1) + (std::log(10.0) - std::log(0.1)) * u01(gen));
  const double beta = std::exp(std::log(0.1) + (std::log(100.0) - std::log(0.1)) * u01(gen));
  const double angle = std::numbers::pi * u01(gen);
  const Sym2 A = compose(kappa * lambda2, lambda2, angle);
  double qn = 10.0 * u01(gen);
  double qa = 2.0 * std::numbers::pi * u01(gen);
  if (kind == 1) qn = 0.0;
  if (kind == 2) qa = angle + std::numbers::pi * std::floor(4.0 * u01(gen)) / 2.0;  // on an eigen-axis
  return {{qn * std::cos(qa), qn * std::sin(qa)}, A, p, beta};
}

inline ProxCheckReport prox_check(const ProxCheckOptions& opt, const ProxConfig& cfg = {}) {
  std::mt19937_64 gen(opt.seed);
  ProxCheckReport rep;
  for (int k = 0; k < opt.n_problems; ++k) {
    const ProxProblem prob = random_prox_problem(gen, opt.fixed_p);
    const Vec2 t = prox_dtv(prob, cfg);
    // F(t*) <= F(0) implies ||t* - q|| <= ||q||, so t* lies in the 2||q|| ball
    const double extent = 2.0 * norm(prob.q);
    const Vec2 tg = prox_oracle(prob, extent, opt.grid_n);
    const double gap = prox_objective(prob, t) - prox_objective(prob, tg);
    rep.max_gap = std::max(rep.max_gap, gap);
    if (!(gap <= opt.gap_tol)) ++rep.failures;
    if (prob.p == 2.0) {
      const Sym2 M{2.0 * prob.A.xx + prob.beta, 2.0 * prob.A.xy, 2.0 * prob.A.yy + prob.beta};
      const Vec2 cf{prob.beta * (M.yy * prob.q.x - M.xy * prob.q.y) / M.det(),
                    prob.beta * (M.xx * prob.q.y - M.xy * prob.q.x) / M.det()};
      rep.max_closed_form_error = std::max(rep.max_closed_form_error, norm(t - cf));
    }
    ++rep.n_problems;
  }
  return rep;
}

}  // namespace dtvp
