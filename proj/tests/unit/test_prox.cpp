#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dtvp/pipeline.hpp"
#include "dtvp/prox.hpp"

using namespace dtvp;
constexpr double kPi = std::numbers::pi;

namespace {

// Refines the grid optimum with a local grid; returns objective value.
double oracle_value(const ProxProblem& prob, int n = 801) {
  const double ext = 2.0 * norm(prob.q);
  Vec2 t = prox_oracle(prob, ext, n);
  double h = 2.0 * ext / (n - 1);
  for (int round = 0; round < 6; ++round) {
    ProxProblem shifted = prob;
    shifted.q = prob.q - t;
    Vec2 best = t;
    double bf = prox_objective(prob, t);
    for (int i = -20; i <= 20; ++i)
      for (int j = -20; j <= 20; ++j) {
        const Vec2 c{t.x + i * h / 10, t.y + j * h / 10};
        const double f = prox_objective(prob, c);
        if (f < bf) {
          bf = f;
          best = c;
        }
      }
    t = best;
    h /= 10;
  }
  return prox_objective(prob, t);
}

}  // namespace

TEST(Prox, FrozenSparseCase) {
  // p = 0.5, A = diag(4, 1), beta = 1, q = (0.7, 0.3): the origin wins, F = 0.29
  const ProxProblem prob{{0.7, 0.3}, {4.0, 0.0, 1.0}, 0.5, 1.0};
  const Vec2 t = prox_dtv(prob);
  EXPECT_EQ(t.x, 0.0);
  EXPECT_EQ(t.y, 0.0);
  EXPECT_NEAR(prox_objective(prob, t), 0.29, 1e-15);
}

TEST(Prox, ZeroInputGivesZero) {
  for (double p : {0.3, 1.0, 2.0, 3.0}) {
    const Vec2 t = prox_dtv({{0.0, 0.0}, {3.0, 1.0, 2.0}, p, 2.0});
    EXPECT_EQ(t.x, 0.0);
    EXPECT_EQ(t.y, 0.0);
  }
}

TEST(Prox, QuadraticClosedForms) {
  // isotropic: t = beta q / (beta + 2 lambda)
  const double lambda = 1.7, beta = 3.0;
  const Vec2 q{0.4, -1.1};
  const Vec2 t = prox_dtv({q, {lambda, 0.0, lambda}, 2.0, beta});
  EXPECT_NEAR(t.x, beta * q.x / (beta + 2 * lambda), 1e-12);
  EXPECT_NEAR(t.y, beta * q.y / (beta + 2 * lambda), 1e-12);
  // diagonal anisotropic: componentwise shrink
  const Vec2 d = prox_dtv({q, {4.0, 0.0, 0.5}, 2.0, beta});
  EXPECT_NEAR(d.x, beta * q.x / (beta + 8.0), 1e-12);
  EXPECT_NEAR(d.y, beta * q.y / (beta + 1.0), 1e-12);
}

TEST(Prox, IsotropicP1IsSoftThresholding) {
  // ||t|| + (beta/2)||t - q||^2 shrinks the norm by 1/beta
  const double beta = 2.0;
  for (double r : {0.2, 0.5, 0.9, 3.0}) {
    const Vec2 q{r * std::cos(0.6), r * std::sin(0.6)};
    const ProxProblem prob{q, {1.0, 0.0, 1.0}, 1.0, beta};
    const Vec2 t = prox_dtv(prob);
    const double shrink = std::max(r - 1.0 / beta, 0.0);
    EXPECT_NEAR(norm(t), shrink, 1e-7);
    EXPECT_LE(prox_objective(prob, t), prox_objective(prob, (shrink / r) * q) + 1e-14);
  }
}

TEST(Prox, MatchesRefinedGridOracle) {
  std::mt19937_64 gen(1234);
  for (int k = 0; k < 60; ++k) {
    const ProxProblem prob = random_prox_problem(gen);
    const double f = prox_objective(prob, prox_dtv(prob));
    EXPECT_LE(f, oracle_value(prob) + 1e-10) << "case " << k << " p=" << prob.p;
  }
}

TEST(Prox, RotationCovariance) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> ua(0.0, 2 * kPi);
  for (int k = 0; k < 100; ++k) {
    ProxProblem prob = random_prox_problem(gen);
    const double a = ua(gen), c = std::cos(a), s = std::sin(a);
    ProxProblem rot = prob;
    rot.q = {c * prob.q.x - s * prob.q.y, s * prob.q.x + c * prob.q.y};
    const auto e = eigen(prob.A);
    rot.A = compose(e.large, e.small, e.axis + a);
    const double f1 = prox_objective(prob, prox_dtv(prob));
    const double f2 = prox_objective(rot, prox_dtv(rot));
    EXPECT_NEAR(f1, f2, 1e-9 * std::max(1.0, std::abs(f1)));
  }
}

TEST(Prox, SignEquivariance) {
  std::mt19937_64 gen(5);
  for (int k = 0; k < 100; ++k) {
    ProxProblem prob = random_prox_problem(gen);
    const Vec2 t = prox_dtv(prob);
    ProxProblem neg = prob;
    neg.q = -1.0 * prob.q;
    const Vec2 tn = prox_dtv(neg);
    EXPECT_EQ(tn.x, -t.x);
    EXPECT_EQ(tn.y, -t.y);
  }
}

TEST(Prox, ShrinkageAndDescent) {
  std::mt19937_64 gen(17);
  for (int k = 0; k < 300; ++k) {
    const ProxProblem prob = random_prox_problem(gen);
    const Vec2 t = prox_dtv(prob);
    // never worse than the origin or q itself, and never outside the ||q|| ball around q
    EXPECT_LE(prox_objective(prob, t), prox_objective(prob, {0.0, 0.0}) + 1e-12);
    EXPECT_LE(prox_objective(prob, t), prox_objective(prob, prob.q) + 1e-12);
    EXPECT_LE(norm(t), norm(prob.q) * (1 + 1e-12));
    EXPECT_LE(prob.A.quad(t), prob.A.quad(prob.q) * (1 + 1e-9) + 1e-300);
  }
}

TEST(Prox, HyperbolaFeasibility) {
  std::mt19937_64 gen(21);
  int checked = 0;
  for (int k = 0; k < 500; ++k) {
    const ProxProblem prob = random_prox_problem(gen);
    const auto tr = prox_dtv_traced(prob, {});
    if (tr.closed_form || tr.isotropic || tr.axis || norm(prob.q) == 0.0) continue;
    const double c1 = -tr.qbar.x / (tr.kappa - 1), c2 = tr.kappa * tr.qbar.y / (tr.kappa - 1);
    const double lhs = (tr.z.x - c1) * (tr.z.y - c2), rhs = c1 * c2;
    EXPECT_LE(std::abs(lhs - rhs), 1e-9 * std::abs(rhs) + 1e-14) << k;
    EXPECT_GE(tr.z.x, 0.0);
    EXPECT_LE(tr.z.x, tr.qbar.x);
    EXPECT_GE(tr.z.y, 0.0);
    EXPECT_LE(tr.z.y, tr.qbar.y * (1 + 1e-12));
    ++checked;
  }
  EXPECT_GT(checked, 200);
}

TEST(Prox, SolveOneDMatchesDenseScan) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double a = 3 * u(gen), b = 10 * u(gen), c = u(gen);
    auto h = [&](double x) { return std::sin(b * x) * a + c * x * x + std::sqrt(std::abs(x)); };
    const double x = solve_1d(h, 0.0, 2.0, {});
    double best = h(0.0);
    for (int i = 0; i <= 200000; ++i) best = std::min(best, h(2.0 * i / 200000));
    EXPECT_LE(h(x), best + 1e-9);
  }
}

TEST(Prox, SolveOneDPrefersSmallerAbscissaOnTies) {
  EXPECT_EQ(solve_1d([](double) { return 1.0; }, 0.5, 2.0, {}), 0.5);
  // two exactly equal minima at grid nodes 0 and 1
  auto h = [](double x) { return x == 0.0 || x == 1.0 ? -1.0 : 0.0; };
  EXPECT_EQ(solve_1d(h, 0.0, 1.0, {}), 0.0);
}

TEST(Prox, RejectsInvalidProblems) {
  EXPECT_THROW(prox_dtv({{1, 1}, {1, 0, 1}, 0.0, 1.0}), domain_error);
  EXPECT_THROW(prox_dtv({{1, 1}, {1, 0, 1}, 1.0, 0.0}), domain_error);
  EXPECT_THROW(prox_dtv({{1, 1}, {1, 2, 1}, 1.0, 1.0}), domain_error);
}

TEST(ProxCheck, SmallSweepPassesAndIsReproducible) {
  ProxCheckOptions opt;
  opt.n_problems = 20;
  opt.grid_n = 401;
  opt.gap_tol = 1e-8;
  const auto a = prox_check(opt);
  const auto b = prox_check(opt);
  EXPECT_EQ(a.failures, 0);
  EXPECT_EQ(a.max_gap, b.max_gap);
  opt.fixed_p = 2.0;
  EXPECT_LT(prox_check(opt).max_closed_form_error, 1e-10);
}
