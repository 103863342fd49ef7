// Restoration quality measures and estimator statistics.
#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "dtvp/core.hpp"
#include "dtvp/operators.hpp"

namespace dtvp {

inline constexpr double kInfinityDb = std::numeric_limits<double>::infinity();

/// 10 log10(||Ku - mean(Ku)||^2 / ||g - Ku||^2) given the blurred clean image Ku.
inline double bsnr_from_blurred(const Image& ku, const Image& g) {
  require_same_shape(ku, g, "bsnr");
  const double m = mean(ku);
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < ku.size(); ++i) {
    signal += (ku[i] - m) * (ku[i] - m);
    noise += (g[i] - ku[i]) * (g[i] - ku[i]);
  }
  if (noise == 0.0) return kInfinityDb;
  return 10.0 * std::log10(signal / noise);
}

inline double bsnr(const Image& u_clean, const PsfSpec& psf, const Image& g) {
  require_same_shape(u_clean, g, "bsnr");
  const SpectralCache cache(u_clean.width(), u_clean.height(), psf);
  return bsnr_from_blurred(blur_apply(u_clean, cache), g);
}

/// 10 log10(||g - u||^2 / ||u* - u||^2).
inline double isnr(const Image& g, const Image& u_clean, const Image& u_restored) {
  require_same_shape(g, u_clean, "isnr");
  require_same_shape(u_restored, u_clean, "isnr");
  double before = 0.0, after = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    before += (g[i] - u_clean[i]) * (g[i] - u_clean[i]);
    after += (u_restored[i] - u_clean[i]) * (u_restored[i] - u_clean[i]);
  }
  if (after == 0.0) return kInfinityDb;
  return 10.0 * std::log10(before / after);
}

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1. Only windows fully inside the image count.
inline double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  constexpr int win = 11;
  constexpr double wsigma = 1.5;
  if (a.width() < win || a.height() < win) throw domain_error("ssim needs images of at least 11x11");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

  std::vector<double> kernel(win * win);
  double ksum = 0.0;
  for (int r = 0; r < win; ++r)
    for (int c = 0; c < win; ++c) {
      const double dr = r - win / 2, dc = c - win / 2;
      kernel[static_cast<std::size_t>(r * win + c)] = std::exp(-(dr * dr + dc * dc) / (2.0 * wsigma * wsigma));
      ksum += kernel[static_cast<std::size_t>(r * win + c)];
    }
  for (double& k : kernel) k /= ksum;

  const std::size_t rows = a.height() - win + 1, cols = a.width() - win + 1;
  double total = 0.0;
  for (std::size_t r0 = 0; r0 < rows; ++r0)
    for (std::size_t c0 = 0; c0 < cols; ++c0) {
      double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int r = 0; r < win; ++r)
        for (int c = 0; c < win; ++c) {
          const double k = kernel[static_cast<std::size_t>(r * win + c)];
          const double va = a(r0 + r, c0 + c), vb = b(r0 + r, c0 + c);
          ma += k * va;
          mb += k * vb;
          saa += k * va * va;
          sbb += k * vb * vb;
          sab += k * va * vb;
        }
      const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
  return total / static_cast<double>(rows * cols);
}

struct EstimatorStats {
  double rel_bias = 0.0;
  double emp_variance = 0.0;
  double rel_variance = 0.0;  ///< emp_variance / truth^2
  double rel_rmse = 0.0;
  std::size_t n_runs = 0;
  std::size_t n_samples = 0;
};

/// Relative bias, empirical variance and relative RMSE of a set of
/// estimates. The RMSE combines V with the absolute bias (B * truth), so
/// rmse = sqrt(V + B^2 truth^2) / |truth|.
inline EstimatorStats estimator_stats(std::span<const double> estimates, double truth,
                                      std::size_t n_samples = 0) {
  if (estimates.size() < 2) throw domain_error("estimator_stats needs at least two runs");
  if (truth == 0.0) throw domain_error("estimator_stats needs a non-zero truth");
  const double l = static_cast<double>(estimates.size());
  double avg = 0.0;
  for (double v : estimates) avg += v;
  avg /= l;
  double var = 0.0;
  for (double v : estimates) var += (v - avg) * (v - avg);
  var /= (l - 1.0);
  EstimatorStats st;
  st.rel_bias = (avg - truth) / truth;
  st.emp_variance = var;
  st.rel_variance = var / (truth * truth);
  const double abs_bias = avg - truth;
  st.rel_rmse = std::sqrt(var + abs_bias * abs_bias) / std::abs(truth);
  st.n_runs = estimates.size();
  st.n_samples = n_samples;
  return st;
}

}  // namespace dtvp
