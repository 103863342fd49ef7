// Shared domain types for the DTV_p^sv-L2 restoration library.
//
// Conventions:
//  * images are row-major, index (row, col), intensities nominally in [0,1];
//  * gradients are (horizontal, vertical) = (d/dcol, d/drow);
//  * the BGGD covariance is parametrised in polar form (rho, phi) with
//    trace fixed to 2, and the principal axis angle theta is measured
//    counter-clockwise from the horizontal axis in the (D_h, D_v) plane.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dtvp {

/// Invalid input (shape mismatch, parameter out of range, ...).
struct domain_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The maximum-likelihood problem has no interior minimiser (collinear
/// gradient samples).
struct estimation_error : domain_error {
  using domain_error::domain_error;
};

/// Non-finite values showed up during an iteration.
struct numerical_error : std::runtime_error {
  numerical_error(const std::string& what, int iter)
      : std::runtime_error(what + " (iteration " + std::to_string(iter) + ")"),
        iteration(iter) {}
  int iteration;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Symmetric 2x2 matrix [xx xy; xy yy].
struct Sym2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  double trace() const { return xx + yy; }
  double det() const { return xx * yy - xy * xy; }
  double quad(Vec2 v) const { return xx * v.x * v.x + 2.0 * xy * v.x * v.y + yy * v.y * v.y; }
  Vec2 apply(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
};

/// Eigen-decomposition of a symmetric 2x2 matrix: values sorted descending,
/// `axis` is the angle of the eigenvector belonging to `large`.
struct SymEigen {
  double large;
  double small;
  double axis;
};

inline SymEigen eigen(const Sym2& m) {
  const double half_tr = 0.5 * (m.xx + m.yy);
  const double half_diff = 0.5 * (m.xx - m.yy);
  const double r = std::hypot(half_diff, m.xy);
  // atan2(2b, a-c)/2 is the principal-axis angle; exact zero when diagonal.
  const double axis = 0.5 * std::atan2(2.0 * m.xy, m.xx - m.yy);
  return {half_tr + r, half_tr - r, axis};
}

/// R diag(a, b) R^T with R the counter-clockwise rotation by `angle`.
inline Sym2 compose(double a, double b, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {a * c * c + b * s * s, (a - b) * c * s, a * s * s + b * c * c};
}

/// Single-channel image, row-major.
class Image {
 public:
  Image() = default;
  Image(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), data_(width * height, fill) {
    if (width == 0 || height == 0) throw domain_error("image dimensions must be positive");
  }
  Image(std::size_t width, std::size_t height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width == 0 || height == 0) throw domain_error("image dimensions must be positive");
    if (data_.size() != width * height) throw domain_error("image data length != width*height");
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Image& o) const { return width_ == o.width_ && height_ == o.height_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

inline double inner(const Image& a, const Image& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const Image& a) { return std::sqrt(inner(a, a)); }

inline double mean(const Image& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s / static_cast<double>(a.size());
}

inline Image operator-(const Image& a, const Image& b) {
  Image out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] -= b[i];
  return out;
}

inline Image operator+(const Image& a, const Image& b) {
  Image out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += b[i];
  return out;
}

inline Image operator*(double s, const Image& a) {
  Image out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

inline bool all_finite(const Image& a) {
  for (double v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

/// Two-channel per-pixel vector field (horizontal, vertical components).
struct GradientField {
  Image gx;
  Image gy;

  GradientField() = default;
  GradientField(std::size_t width, std::size_t height)
      : gx(width, height), gy(width, height) {}
  GradientField(Image h, Image v) : gx(std::move(h)), gy(std::move(v)) {
    if (!gx.same_shape(gy)) throw domain_error("gradient channels differ in shape");
  }

  std::size_t width() const { return gx.width(); }
  std::size_t height() const { return gx.height(); }
  std::size_t size() const { return gx.size(); }
  Vec2 at(std::size_t i) const { return {gx[i], gy[i]}; }
  void set(std::size_t i, Vec2 v) {
    gx[i] = v.x;
    gy[i] = v.y;
  }
  bool same_shape(const Image& u) const { return gx.same_shape(u); }
};

inline double inner(const GradientField& a, const GradientField& b) {
  return inner(a.gx, b.gx) + inner(a.gy, b.gy);
}

inline double l2_norm(const GradientField& a) { return std::sqrt(inner(a, a)); }

inline GradientField operator-(const GradientField& a, const GradientField& b) {
  return {a.gx - b.gx, a.gy - b.gy};
}

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw domain_error(std::string("shape mismatch: ") + what);
}

/// BGGD parameters in the estimator's parametrisation.
struct BggdParams {
  double p = 2.0;    ///< shape exponent
  double phi = 0.0;  ///< polar angle of the covariance offset, [0, 2pi)
  double rho = 0.0;  ///< polar radius, [0, 1)
  double m = 1.0;    ///< scale
};

/// Regulariser-side description of the same covariance.
struct AnisotropyWeights {
  double e1 = 1.0;
  double e2 = 1.0;
  double lambda1 = 1.0;  // 1/sqrt(e1)
  double lambda2 = 1.0;  // 1/sqrt(e2)
  double theta = 0.0;    // principal axis angle, [0, pi)
};

struct EllipseGeometry {
  double a;
  double b;
  double eccentricity;
};

inline double wrap_angle(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

inline void check_rho(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw domain_error("rho must lie in [0, 1)");
}

/// Unit-trace-2 covariance Sigma(rho, phi) and its inverse.
struct CovariancePair {
  Sym2 sigma;
  Sym2 inverse;
};

inline CovariancePair sigma_from_polar(double rho, double phi) {
  check_rho(rho);
  const double c = rho * std::cos(phi);
  const double s = rho * std::sin(phi);
  const double inv_det = 1.0 / (1.0 - rho * rho);
  return {{1.0 - c, s, 1.0 + c}, {inv_det * (1.0 + c), -inv_det * s, inv_det * (1.0 - c)}};
}

/// Eigenvalues e1 = 1+rho, e2 = 1-rho and the principal-axis angle.
/// The e1 eigenvector of Sigma(rho, phi) is (sin phi, 1 + cos phi), i.e.
/// direction pi/2 - phi/2; the half-angle atan2 form has no 0/0 at phi = pi.
inline AnisotropyWeights weights_from_polar(double rho, double phi) {
  check_rho(rho);
  AnisotropyWeights w;
  w.e1 = 1.0 + rho;
  w.e2 = 1.0 - rho;
  w.lambda1 = 1.0 / std::sqrt(w.e1);
  w.lambda2 = 1.0 / std::sqrt(w.e2);
  w.theta = wrap_angle(std::atan2(std::cos(0.5 * phi), std::sin(0.5 * phi)), std::numbers::pi);
  return w;
}

/// Inverse of weights_from_polar: (rho, phi) with phi in [0, 2pi).
inline std::pair<double, double> polar_from_axis(double e1, double theta) {
  const double rho = e1 - 1.0;
  check_rho(rho);
  return {rho, wrap_angle(std::numbers::pi - 2.0 * theta, 2.0 * std::numbers::pi)};
}

inline EllipseGeometry ellipse_geometry(const AnisotropyWeights& w) {
  const double a = std::sqrt(w.e1);
  return {a, std::sqrt(w.e2), std::sqrt(std::max(w.e1 - w.e2, 0.0)) / a};
}

/// Precision matrix Sigma^{-1} = R_theta diag(lambda1^2, lambda2^2) R_theta^T.
/// This is the matrix A of the regulariser term (t^T A t)^{p/2}.
inline Sym2 precision_matrix(const AnisotropyWeights& w) {
  return compose(w.lambda1 * w.lambda1, w.lambda2 * w.lambda2, w.theta);
}

/// Per-pixel parameter maps.
struct ParamMaps {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<BggdParams> params;
  std::vector<AnisotropyWeights> weights;

  ParamMaps() = default;
  ParamMaps(std::size_t w, std::size_t h) : width(w), height(h), params(w * h), weights(w * h) {}

  std::size_t size() const { return params.size(); }
  bool matches(const Image& u) const { return width == u.width() && height == u.height(); }

  void set(std::size_t i, const BggdParams& bp) {
    params[i] = bp;
    weights[i] = weights_from_polar(bp.rho, bp.phi);
  }

  /// Uniform maps with shape exponent p and covariance (rho, phi).
  static ParamMaps uniform(std::size_t w, std::size_t h, double p, double rho = 0.0,
                           double phi = 0.0) {
    ParamMaps maps(w, h);
    for (std::size_t i = 0; i < maps.size(); ++i) maps.set(i, {p, phi, rho, 1.0});
    return maps;
  }
};

}  // namespace dtvp
