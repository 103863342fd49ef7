#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dtvp/solver.hpp"
#include "dtvp/synth.hpp"

using namespace dtvp;

namespace {

Image random_image(std::size_t w, std::size_t h, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  Image u(w, h);
  for (double& v : u.data()) v = scale * n01(gen);
  return u;
}

}  // namespace

TEST(RUpdate, InsideBallKeepsWAndZeroMu) {
  const Image w = random_image(5, 4, 1, 0.1);
  const double delta = 2.0 * l2_norm(w);
  const auto ru = r_update(w, delta, 10.0);
  EXPECT_EQ(ru.mu, 0.0);
  EXPECT_TRUE(ru.r == w);
}

TEST(RUpdate, OutsideBallProjectsAndSetsMu) {
  const Image w = random_image(5, 4, 2);
  const double nw = l2_norm(w), delta = 0.25 * nw, beta = 7.0;
  const auto ru = r_update(w, delta, beta);
  EXPECT_NEAR(l2_norm(ru.r), delta, 1e-14 * delta);
  EXPECT_NEAR(ru.mu, beta * (nw / delta - 1.0), 1e-12);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(ru.r[i], w[i] * delta / nw, 1e-15);
  // r = w beta / (mu + beta): the optimality relation of the projected problem
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(ru.r[i], beta * w[i] / (ru.mu + beta), 1e-14);
}

TEST(RUpdate, BoundaryIsInside) {
  Image w(2, 1);
  w[0] = 3.0;
  w[1] = 4.0;
  const auto ru = r_update(w, 5.0, 1.0);
  EXPECT_EQ(ru.mu, 0.0);
}

TEST(TUpdate, MatchesPerPixelProx) {
  const std::size_t w = 6, h = 5;
  ParamMaps maps(w, h);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u01;
  for (std::size_t i = 0; i < maps.size(); ++i) maps.set(i, {0.2 + 1.8 * u01(gen), 6.0 * u01(gen), 0.9 * u01(gen), 1.0});
  const GradientField du(random_image(w, h, 4), random_image(w, h, 5));
  const GradientField rho(random_image(w, h, 6), random_image(w, h, 7));
  const auto t = t_update(du, rho, 3.0, maps);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const Vec2 q = du.at(i) + (1.0 / 3.0) * rho.at(i);
    const Vec2 ref = prox_dtv({q, precision_matrix(maps.weights[i]), maps.params[i].p, 3.0});
    EXPECT_EQ(t.at(i).x, ref.x);
    EXPECT_EQ(t.at(i).y, ref.y);
  }
}

TEST(Restore, DiscrepancyAndConvergenceOnDenoising) {
  const Image clean = synth::geometric(32, 32);
  const auto psf = make_psf(1, 1.0);
  const auto d = degrade(clean, psf, 0.05, 0.0, false, 11);
  SolverConfig cfg;
  const auto res = restore(d.g, psf, d.sigma, ParamMaps::uniform(32, 32, 1.0), cfg);
  ASSERT_TRUE(res.converged);
  EXPECT_EQ(res.trace.size(), static_cast<std::size_t>(res.state.k));
  EXPECT_LE(res.trace.back().data_fit, 1.05 * res.delta);
  EXPECT_GT(res.trace.back().mu, 0.0);
  EXPECT_GT(l2_norm(d.g - clean) - l2_norm(res.u - clean), 0.0);
}

TEST(Restore, QuadraticMapsConvergeOnDeblurring) {
  const Image clean = synth::stripes(32, 32);
  const auto psf = make_psf(7, 1.5);
  const auto d = degrade(clean, psf, 0.0, 20.0, true, 12);
  const auto res = restore(d.g, psf, d.sigma, ParamMaps::uniform(32, 32, 2.0), {});
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.trace.size(), 500u);
}

TEST(Restore, ValidatesInputs) {
  const Image g(8, 8, 0.5);
  const auto psf = make_psf(3, 1.0);
  EXPECT_THROW(restore(g, psf, 0.0, ParamMaps::uniform(8, 8, 1.0), {}), domain_error);
  EXPECT_THROW(restore(g, psf, 0.1, ParamMaps::uniform(8, 7, 1.0), {}), domain_error);
  SolverConfig bad;
  bad.tau = 0.5;
  EXPECT_THROW(restore(g, psf, 0.1, ParamMaps::uniform(8, 8, 1.0), bad), domain_error);
  Image nan = g;
  nan[3] = std::nan("");
  EXPECT_THROW(restore(nan, psf, 0.1, ParamMaps::uniform(8, 8, 1.0), {}), domain_error);
}

TEST(Restore, DeterministicRerun) {
  const Image clean = synth::checkerboard(16, 16, 4);
  const auto psf = make_psf(3, 1.0);
  const auto d = degrade(clean, psf, 0.0, 15.0, true, 3);
  const auto maps = ParamMaps::uniform(16, 16, 0.8, 0.5, 1.0);
  const auto a = restore(d.g, psf, d.sigma, maps, {});
  const auto b = restore(d.g, psf, d.sigma, maps, {});
  EXPECT_TRUE(a.u == b.u);
}

TEST(Restore, ConstraintResidualsSmallOnConvexBenchmarks) {
  const auto psf = make_psf(7, 1.5);
  for (double p : {1.0, 2.0})
    for (const char* name : {"stripes", "geometric"}) {
      const Image clean = synth::by_name(name, 32, 32);
      const auto d = degrade(clean, psf, 0.0, 15.0, true, 21);
      const auto res = restore(d.g, psf, d.sigma, ParamMaps::uniform(32, 32, p), {});
      ASSERT_TRUE(res.converged) << name << " p=" << p;
      const auto& last = res.trace.back();
      EXPECT_LE(last.res_t, 10 * 1e-4 * l2_norm(grad_forward(res.u))) << name << " p=" << p;
      EXPECT_LE(last.res_r, 10 * 1e-4 * l2_norm(d.g)) << name << " p=" << p;
    }
}

TEST(Restore, QuadraticRelativeChangeEventuallyMonotone) {
  const auto psf = make_psf(7, 1.5);
  const Image clean = synth::geometric(32, 32);
  const auto d = degrade(clean, psf, 0.0, 20.0, true, 5);
  const auto res = restore(d.g, psf, d.sigma, ParamMaps::uniform(32, 32, 2.0), {});
  ASSERT_TRUE(res.converged);
  const std::size_t n = res.trace.size(), tail = std::min<std::size_t>(20, n - 2);
  for (std::size_t k = n - tail; k < n; ++k) EXPECT_LE(res.trace[k].rel_change, res.trace[k - 1].rel_change) << k;
}

TEST(Warmup, ZeroIterationsReturnsInputAndFiveReduceFlatNoise) {
  const Image clean = synth::stripes(64, 64);
  const auto psf = make_psf(7, 1.5);
  const auto d = degrade(clean, psf, 0.0, 15.0, true, 8);
  SolverConfig cfg;
  cfg.warmup_iters = 0;
  EXPECT_TRUE(restore_tv_warmup(d.g, psf, d.sigma, cfg) == d.g);
  cfg.warmup_iters = 5;
  const Image w = restore_tv_warmup(d.g, psf, d.sigma, cfg);
  // variance inside flat stripe interiors (columns 2..5 of each period)
  auto flat_var = [](const Image& u) {
    double s = 0, s2 = 0;
    int n = 0;
    for (std::size_t r = 0; r < u.height(); ++r)
      for (std::size_t c = 0; c < u.width(); ++c)
        if (c % 8 >= 3 && c % 8 <= 4 && (c / 8) % 2 == 0) {
          s += u(r, c);
          s2 += u(r, c) * u(r, c);
          ++n;
        }
    return s2 / n - (s / n) * (s / n);
  };
  EXPECT_LT(flat_var(w), flat_var(d.g));
}
