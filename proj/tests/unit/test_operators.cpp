#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "dtvp/operators.hpp"

using namespace dtvp;

namespace {

Image random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  Image u(w, h);
  for (double& v : u.data()) v = n01(gen);
  return u;
}

GradientField random_field(std::size_t w, std::size_t h, std::uint64_t seed) {
  return {random_image(w, h, seed), random_image(w, h, seed + 1)};
}

// Spatial circular convolution, independent of the FFT path.
Image convolve_direct(const Image& u, const PsfSpec& psf) {
  const int w = static_cast<int>(u.width()), h = static_cast<int>(u.height()), hb = psf.band / 2;
  Image out(u.width(), u.height());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int dr = -hb; dr <= hb; ++dr)
        for (int dc = -hb; dc <= hb; ++dc)
          acc += psf.at(dr, dc) * u(static_cast<std::size_t>(((r - dr) % h + h) % h),
                                    static_cast<std::size_t>(((c - dc) % w + w) % w));
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  return out;
}

Image shift(const Image& u, std::size_t dr, std::size_t dc) {
  Image out(u.width(), u.height());
  for (std::size_t r = 0; r < u.height(); ++r)
    for (std::size_t c = 0; c < u.width(); ++c)
      out((r + dr) % u.height(), (c + dc) % u.width()) = u(r, c);
  return out;
}

double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Psf, NormalisedAndValidated) {
  const auto psf = make_psf(7, 1.5);
  double s = 0.0;
  for (double v : psf.kernel) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(psf.at(-2, 1), psf.at(2, -1));
  EXPECT_THROW(make_psf(4, 1.0), domain_error);
  EXPECT_THROW(make_psf(3, 0.0), domain_error);
  EXPECT_EQ(make_psf(1, 2.0).kernel.size(), 1u);
}

TEST(Blur, MatchesSpatialConvolution) {
  const auto psf = make_psf(5, 1.2);
  const Image u = random_image(13, 9, 3);
  const SpectralCache cache(13, 9, psf);
  EXPECT_LT(max_abs_diff(blur_apply(u, cache), convolve_direct(u, psf)), 1e-12);
}

TEST(Blur, BandOneIsIdentity) {
  const Image u = random_image(8, 6, 1);
  const SpectralCache cache(8, 6, make_psf(1, 1.0));
  EXPECT_LT(max_abs_diff(blur_apply(u, cache), u), 1e-14);
}

TEST(Adjoint, GradientAndBlur) {
  const std::size_t w = 17, h = 11;
  const Image u = random_image(w, h, 4);
  const GradientField t = random_field(w, h, 5);
  const double lhs = inner(grad_forward(u), t), rhs = inner(u, grad_transpose(t));
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
  const SpectralCache cache(w, h, make_psf(7, 1.5));
  const Image v = random_image(w, h, 6);
  const double a = inner(blur_apply(u, cache), v), b = inner(u, blur_transpose(v, cache));
  EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
}

TEST(Operators, CommuteWithCyclicShifts) {
  const Image u = random_image(12, 10, 8);
  const SpectralCache cache(12, 10, make_psf(5, 1.0));
  EXPECT_LT(max_abs_diff(blur_apply(shift(u, 3, 5), cache), shift(blur_apply(u, cache), 3, 5)), 1e-12);
  const auto g1 = grad_forward(shift(u, 2, 7));
  const auto g0 = grad_forward(u);
  EXPECT_LT(max_abs_diff(g1.gx, shift(g0.gx, 2, 7)), 1e-15);
  EXPECT_LT(max_abs_diff(g1.gy, shift(g0.gy, 2, 7)), 1e-15);
}

TEST(Operators, ForwardDifferenceValues) {
  Image u(3, 2);
  for (std::size_t i = 0; i < 6; ++i) u[i] = static_cast<double>(i * i);
  const auto g = grad_forward(u);
  EXPECT_EQ(g.gx(0, 0), 1.0);
  EXPECT_EQ(g.gx(0, 2), -4.0);  // wraps to column 0
  EXPECT_EQ(g.gy(0, 1), 15.0);
  EXPECT_EQ(g.gy(1, 1), -15.0);
}

TEST(USolve, MatchesDenseNormalEquations) {
  const std::size_t w = 12, h = 10, n = w * h;
  const double beta_r = 7.0, beta_t = 3.0, gamma = beta_r / beta_t;
  const SpectralCache cache(w, h, make_psf(5, 1.3));
  Eigen::MatrixXd Dh(n, n), Dv(n, n), K(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Image e(w, h);
    e[j] = 1.0;
    const auto g = grad_forward(e);
    const Image k = convolve_direct(e, make_psf(5, 1.3));
    for (std::size_t i = 0; i < n; ++i) {
      Dh(i, j) = g.gx[i];
      Dv(i, j) = g.gy[i];
      K(i, j) = k[i];
    }
  }
  const GradientField t = random_field(w, h, 10);
  const Image r = random_image(w, h, 12), g = random_image(w, h, 13);
  auto vec = [&](const Image& im) { return Eigen::Map<const Eigen::VectorXd>(im.data().data(), n); };
  const Eigen::MatrixXd M = Dh.transpose() * Dh + Dv.transpose() * Dv + gamma * K.transpose() * K;
  const Eigen::VectorXd rhs = Dh.transpose() * vec(t.gx) + Dv.transpose() * vec(t.gy) +
                              gamma * K.transpose() * (vec(r) + vec(g));
  const Eigen::VectorXd ref = M.ldlt().solve(rhs);
  const Image u = u_solve(t, r, g, beta_r, beta_t, cache);
  EXPECT_LT((vec(u) - ref).lpNorm<Eigen::Infinity>(), 1e-10);
  // and the normal operator reproduces the right-hand side
  const Image back = apply_normal_operator(u, gamma, cache);
  EXPECT_LT((vec(back) - rhs).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(USolve, RejectsBadInputs) {
  const SpectralCache cache(4, 4, make_psf(3, 1.0));
  EXPECT_THROW(u_solve(GradientField(4, 4), Image(4, 4), Image(4, 4), 0.0, 1.0, cache), domain_error);
  EXPECT_THROW(u_solve(GradientField(4, 4), Image(4, 4), Image(5, 4), 1.0, 1.0, cache), domain_error);
}
