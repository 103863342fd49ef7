// Linear operators with periodic boundary conditions: finite differences,
// Gaussian blur and the Fourier-diagonalised u-subproblem solve.
#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "dtvp/core.hpp"

namespace dtvp {

// ---------------------------------------------------------------------------
// finite differences

/// Forward differences: (D_h u)(i,j) = u(i,j+1) - u(i,j), (D_v u)(i,j) =
/// u(i+1,j) - u(i,j), indices mod the image size.
inline GradientField grad_forward(const Image& u) {
  const std::size_t w = u.width(), h = u.height();
  GradientField g(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t rn = (r + 1) % h;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t cn = (c + 1) % w;
      g.gx(r, c) = u(r, cn) - u(r, c);
      g.gy(r, c) = u(rn, c) - u(r, c);
    }
  }
  return g;
}

/// Exact adjoint of grad_forward.
inline Image grad_transpose(const GradientField& t) {
  const std::size_t w = t.width(), h = t.height();
  Image out(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t rp = (r + h - 1) % h;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t cp = (c + w - 1) % w;
      out(r, c) = t.gx(r, cp) - t.gx(r, c) + t.gy(rp, c) - t.gy(r, c);
    }
  }
  return out;
}

/// Central differences (u(j+1) - u(j-1)) / 2 with periodic wrap. Only used to
/// sample gradients for parameter estimation.
inline GradientField grad_central(const Image& u) {
  const std::size_t w = u.width(), h = u.height();
  GradientField g(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t rn = (r + 1) % h, rp = (r + h - 1) % h;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t cn = (c + 1) % w, cp = (c + w - 1) % w;
      g.gx(r, c) = 0.5 * (u(r, cn) - u(r, cp));
      g.gy(r, c) = 0.5 * (u(rn, c) - u(rp, c));
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// point spread function

struct PsfSpec {
  int band = 1;
  double sigma = 1.0;
  std::vector<double> kernel{1.0};  // band x band, row-major, centred

  double at(int dr, int dc) const {
    const int h = band / 2;
    return kernel[static_cast<std::size_t>((dr + h) * band + (dc + h))];
  }
};

/// Truncated Gaussian on a centred band x band stencil, normalised to sum 1.
inline PsfSpec make_psf(int band, double sigma) {
  if (band < 1 || band % 2 == 0) throw domain_error("psf band must be odd and >= 1");
  if (!(sigma > 0.0)) throw domain_error("psf sigma must be positive");
  PsfSpec psf;
  psf.band = band;
  psf.sigma = sigma;
  psf.kernel.assign(static_cast<std::size_t>(band * band), 0.0);
  const int h = band / 2;
  double sum = 0.0;
  for (int r = -h; r <= h; ++r)
    for (int c = -h; c <= h; ++c) {
      const double v = std::exp(-(r * r + c * c) / (2.0 * sigma * sigma));
      psf.kernel[static_cast<std::size_t>((r + h) * band + (c + h))] = v;
      sum += v;
    }
  for (double& v : psf.kernel) v /= sum;
  return psf;
}

// ---------------------------------------------------------------------------
// spectral cache

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  FftPlans(std::size_t w, std::size_t h) {
    const int rows = static_cast<int>(h), cols = static_cast<int>(w);
    std::vector<double> real(w * h);
    std::vector<std::complex<double>> spec(h * (w / 2 + 1));
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    std::lock_guard lock(fftw_planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward = fftw_plan_dft_r2c_2d(rows, cols, real.data(), cplx, flags);
    // c2r destroys its input; callers always pass a scratch copy
    inverse = fftw_plan_dft_c2r_2d(rows, cols, cplx, real.data(), flags);
  }
  ~FftPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
};

}  // namespace detail

using Spectrum = std::vector<std::complex<double>>;

/// Fourier symbols of D_h, D_v and K for one image shape. The half-spectrum
/// layout of real-to-complex transforms is used: height x (width/2 + 1).
class SpectralCache {
 public:
  SpectralCache(std::size_t width, std::size_t height, const PsfSpec& psf)
      : width_(width), height_(height), half_(width / 2 + 1),
        plans_(std::make_shared<detail::FftPlans>(width, height)) {
    if (width == 0 || height == 0) throw domain_error("cache shape must be positive");
    dh_.resize(height_ * half_);
    dv_.resize(height_ * half_);
    for (std::size_t k = 0; k < height_; ++k)
      for (std::size_t l = 0; l < half_; ++l) {
        const double ah = 2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(width_);
        const double av = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(height_);
        dh_[k * half_ + l] = std::polar(1.0, ah) - 1.0;
        dv_[k * half_ + l] = std::polar(1.0, av) - 1.0;
      }
    Image wrapped(width_, height_);
    const int hb = psf.band / 2;
    for (int r = -hb; r <= hb; ++r)
      for (int c = -hb; c <= hb; ++c) {
        const auto rr = static_cast<std::size_t>(((r % static_cast<int>(height_)) + static_cast<int>(height_)) % static_cast<int>(height_));
        const auto cc = static_cast<std::size_t>(((c % static_cast<int>(width_)) + static_cast<int>(width_)) % static_cast<int>(width_));
        wrapped(rr, cc) += psf.at(r, c);
      }
    k_ = forward(wrapped);
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t spectrum_size() const { return height_ * half_; }

  const Spectrum& dh() const { return dh_; }
  const Spectrum& dv() const { return dv_; }
  const Spectrum& k() const { return k_; }

  void check(const Image& u) const {
    if (u.width() != width_ || u.height() != height_)
      throw domain_error("image shape does not match spectral cache");
  }

  Spectrum forward(const Image& u) const {
    check(u);
    Spectrum out(spectrum_size());
    // r2c does not modify its input, but the FFTW signature is non-const
    fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(u.data().data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

  Image inverse(Spectrum spec) const {
    Image out(width_, height_);
    fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(spec.data()),
                         out.data().data());
    const double scale = 1.0 / static_cast<double>(width_ * height_);
    for (double& v : out.data()) v *= scale;
    return out;
  }

 private:
  std::size_t width_, height_, half_;
  std::shared_ptr<const detail::FftPlans> plans_;
  Spectrum dh_, dv_, k_;
};

/// K u as a circular convolution.
inline Image blur_apply(const Image& u, const SpectralCache& cache) {
  Spectrum s = cache.forward(u);
  const Spectrum& k = cache.k();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= k[i];
  return cache.inverse(std::move(s));
}

/// K^T u (correlation). Equal to blur_apply for centro-symmetric kernels.
inline Image blur_transpose(const Image& u, const SpectralCache& cache) {
  Spectrum s = cache.forward(u);
  const Spectrum& k = cache.k();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= std::conj(k[i]);
  return cache.inverse(std::move(s));
}

/// Fourier symbol of D^T D + gamma K^T K at every half-spectrum frequency.
inline std::vector<double> normal_symbol(const SpectralCache& cache, double gamma) {
  std::vector<double> sym(cache.spectrum_size());
  for (std::size_t i = 0; i < sym.size(); ++i)
    sym[i] = std::norm(cache.dh()[i]) + std::norm(cache.dv()[i]) + gamma * std::norm(cache.k()[i]);
  return sym;
}

/// (D^T D + gamma K^T K) u, applied in the spatial domain via D and K.
inline Image apply_normal_operator(const Image& u, double gamma, const SpectralCache& cache) {
  Image out = grad_transpose(grad_forward(u));
  const Image ktk = blur_transpose(blur_apply(u, cache), cache);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += gamma * ktk[i];
  return out;
}

/// Solves (D^T D + (beta_r/beta_t) K^T K) u = D^T t_shift + (beta_r/beta_t) K^T (r_shift + g)
/// where t_shift = t - rho_t/beta_t and r_shift = r - rho_r/beta_r.
inline Image u_solve(const GradientField& t_shift, const Image& r_shift, const Image& g,
                     double beta_r, double beta_t, const SpectralCache& cache) {
  if (!(beta_r > 0.0 && beta_t > 0.0)) throw domain_error("penalty parameters must be positive");
  cache.check(g);
  cache.check(r_shift);
  cache.check(t_shift.gx);
  const double gamma = beta_r / beta_t;
  Spectrum rhs = cache.forward(grad_transpose(t_shift));
  const Spectrum data = cache.forward(r_shift + g);
  const Spectrum& k = cache.k();
  const std::vector<double> sym = normal_symbol(cache, gamma);
  for (std::size_t i = 0; i < rhs.size(); ++i)
    rhs[i] = (rhs[i] + gamma * std::conj(k[i]) * data[i]) / sym[i];
  return cache.inverse(std::move(rhs));
}

}  // namespace dtvp
