// Small derivative-free minimisers used by the estimator and the prox.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace dtvp::opt {

struct Point1 {
  double x;
  double f;
};

/// Golden-section search on [lo, hi]; stops when the bracket is shorter
/// than `tol`. Returns the best point evaluated.
template <typename F>
Point1 golden_section(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    // <= keeps the left point on ties, so the search drifts toward smaller x.
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    if (c == d) break;
  }
  return fc <= fd ? Point1{c, fc} : Point1{d, fd};
}

template <std::size_t N>
struct BoxResult {
  std::array<double, N> x;
  double f;
  int evals;
};

/// Nelder-Mead simplex with projection onto the box [lower, upper]. Stops
/// when the relative value spread is below ftol and the relative vertex
/// spread is below xtol, or after max_evals evaluations. Bounds
/// set to +-infinity leave a coordinate free. The best vertex never gets
/// worse, so the returned value is <= f(x0).
template <std::size_t N, typename F>
BoxResult<N> nelder_mead_box(F&& f, std::array<double, N> x0, std::array<double, N> step,
                             const std::array<double, N>& lower,
                             const std::array<double, N>& upper, double ftol, int max_evals,
                             double xtol = std::numeric_limits<double>::infinity()) {
  using P = std::array<double, N>;
  auto project = [&](P p) {
    for (std::size_t i = 0; i < N; ++i) p[i] = std::clamp(p[i], lower[i], upper[i]);
    return p;
  };

  std::array<P, N + 1> v;
  std::array<double, N + 1> fv;
  int evals = 0;
  auto eval = [&](const P& p) {
    ++evals;
    return f(p);
  };

  v[0] = project(x0);
  fv[0] = eval(v[0]);
  for (std::size_t i = 0; i < N; ++i) {
    P p = v[0];
    p[i] += step[i];
    if (p[i] > upper[i]) p[i] = v[0][i] - step[i];
    v[i + 1] = project(p);
    fv[i + 1] = eval(v[i + 1]);
  }

  std::array<std::size_t, N + 1> order;
  while (evals < max_evals) {
    for (std::size_t i = 0; i <= N; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order[0];
    const std::size_t worst = order[N];
    const std::size_t second = order[N - 1];

    // converged when both the value spread and the simplex extent are small
    const double spread = std::abs(fv[worst] - fv[best]);
    double extent = 0.0;
    for (std::size_t k = 1; k <= N; ++k)
      for (std::size_t i = 0; i < N; ++i)
        extent = std::max(extent, std::abs(v[k][i] - v[0][i]) / (1.0 + std::abs(v[0][i])));
    if (spread <= ftol * (std::abs(fv[best]) + ftol) && extent <= xtol) break;

    P centroid{};
    for (std::size_t k = 0; k < N; ++k) {
      const std::size_t idx = order[k];
      for (std::size_t i = 0; i < N; ++i) centroid[i] += v[idx][i] / static_cast<double>(N);
    }
    auto along = [&](double t) {
      P p;
      for (std::size_t i = 0; i < N; ++i) p[i] = centroid[i] + t * (v[worst][i] - centroid[i]);
      return project(p);
    };

    const P xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      const P xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        v[worst] = xe;
        fv[worst] = fe;
      } else {
        v[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      v[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const P xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      v[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t k = 1; k <= N; ++k) {
      const std::size_t idx = order[k];
      for (std::size_t i = 0; i < N; ++i) v[idx][i] = v[best][i] + 0.5 * (v[idx][i] - v[best][i]);
      v[idx] = project(v[idx]);
      fv[idx] = eval(v[idx]);
    }
    // a collapsed simplex cannot make progress
    double size = 0.0;
    for (std::size_t k = 1; k <= N; ++k)
      for (std::size_t i = 0; i < N; ++i) size = std::max(size, std::abs(v[k][i] - v[0][i]));
    if (size < 1e-14) break;
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k <= N; ++k)
    if (fv[k] < fv[best]) best = k;
  return {v[best], fv[best], evals};
}

}  // namespace dtvp::opt
