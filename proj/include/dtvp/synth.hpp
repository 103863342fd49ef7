// Synthetic test images and seeded degradation.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <random>
#include <string>

#include "dtvp/core.hpp"
#include "dtvp/operators.hpp"

namespace dtvp {

/// splitmix64 finaliser; derives independent per-task seeds from one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t task) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (task + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace synth {

/// Vertical stripes of `period` columns alternating between lo and hi.
inline Image stripes(std::size_t w, std::size_t h, std::size_t period = 8, double lo = 0.2, double hi = 0.8) {
  Image img(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) img(r, c) = (c / period) % 2 == 0 ? lo : hi;
  return img;
}

/// One vertical step edge at column w/2 (periodic wrap adds a second one at
/// the border).
inline Image vertical_edge(std::size_t w, std::size_t h, double lo = 0.2, double hi = 0.8) {
  Image img(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) img(r, c) = c < w / 2 ? lo : hi;
  return img;
}

/// Flat background with a square (edges and corners) and a disc.
inline Image geometric(std::size_t w, std::size_t h, double bg = 0.2, double fg = 0.8) {
  Image img(w, h, bg);
  const double fw = static_cast<double>(w), fh = static_cast<double>(h);
  const double cx = 0.7 * fw, cy = 0.65 * fh, rad = 0.18 * std::min(fw, fh);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double x = static_cast<double>(c), y = static_cast<double>(r);
      const bool in_square = x >= 0.15 * fw && x < 0.45 * fw && y >= 0.15 * fh && y < 0.45 * fh;
      const bool in_disc = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= rad * rad;
      if (in_square || in_disc) img(r, c) = fg;
    }
  return img;
}

inline Image checkerboard(std::size_t w, std::size_t h, std::size_t cell = 8, double lo = 0.2, double hi = 0.8) {
  Image img(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) img(r, c) = ((r / cell) + (c / cell)) % 2 == 0 ? lo : hi;
  return img;
}

inline Image by_name(const std::string& name, std::size_t w, std::size_t h) {
  if (name == "stripes") return stripes(w, h);
  if (name == "edge") return vertical_edge(w, h);
  if (name == "geometric") return geometric(w, h);
  if (name == "checkerboard") return checkerboard(w, h);
  throw domain_error("unknown fixture '" + name + "' (stripes, edge, geometric, checkerboard)");
}

}  // namespace synth

/// Adds zero-mean Gaussian noise with standard deviation sigma.
inline Image add_noise(const Image& u, double sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Image out = u;
  for (double& v : out.data()) v += sigma * n01(gen);
  return out;
}

struct Degraded {
  Image g;
  Image blurred;
  double sigma = 0.0;  ///< noise standard deviation
  double bsnr = 0.0;   ///< measured on g
};

/// g = Ku + b. With bsnr_target set, the noise realisation is rescaled so
/// that ||b||^2 = ||Ku - mean(Ku)||^2 / 10^{bsnr/10} exactly and sigma is
/// reported as ||b|| / sqrt(n).
inline Degraded degrade(const Image& clean, const PsfSpec& psf, double sigma, double bsnr_target, bool use_bsnr,
                        std::uint64_t seed) {
  const SpectralCache cache(clean.width(), clean.height(), psf);
  Degraded d;
  d.blurred = blur_apply(clean, cache);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Image noise(clean.width(), clean.height());
  for (double& v : noise.data()) v = n01(gen);
  const double n = static_cast<double>(clean.size());
  if (use_bsnr) {
    const double m = mean(d.blurred);
    double signal = 0.0;
    for (double v : d.blurred.data()) signal += (v - m) * (v - m);
    sigma = std::sqrt(signal / (n * std::pow(10.0, bsnr_target / 10.0)));
    const double scale = sigma * std::sqrt(n) / l2_norm(noise);
    noise = scale * noise;
  } else {
    if (!(sigma >= 0.0)) throw domain_error("noise sigma must be >= 0");
    noise = sigma * noise;
  }
  d.sigma = sigma;
  d.g = d.blurred + noise;
  const double m = mean(d.blurred);
  double signal = 0.0;
  for (double v : d.blurred.data()) signal += (v - m) * (v - m);
  const double energy = inner(noise, noise);
  d.bsnr = energy > 0.0 ? 10.0 * std::log10(signal / energy) : std::numeric_limits<double>::infinity();
  return d;
}

}  // namespace dtvp
