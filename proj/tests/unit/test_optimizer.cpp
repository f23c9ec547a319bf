#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "hsx/error.hpp"
#include "hsx/geometry.hpp"
#include "hsx/optimizer.hpp"
#include "testkit.hpp"

using namespace hsx;

namespace {

void step(Vector& p, const Vector& g, const SgdConfig& cfg, SgdState& st) {
  const ParamBlock blocks[] = {{p, g}};
  sgd_step(blocks, cfg, st);
}

}  // namespace

TEST(Sgd, PlainStepSubtractsGradient) {
  Vector p{1.0, -2.0, 3.0};
  const Vector g{0.5, 0.25, -1.0};
  SgdState st;
  step(p, g, {1.0, 0.0, 0.0}, st);
  EXPECT_EQ(p, (Vector{0.5, -2.25, 4.0}));
}

TEST(Sgd, PureDecay) {
  Vector p{2.0, -4.0};
  SgdState st;
  step(p, {0.0, 0.0}, {1.0, 0.1, 0.0}, st);
  EXPECT_NEAR(p[0], 1.8, 1e-15);
  EXPECT_NEAR(p[1], -3.6, 1e-15);
}

TEST(Sgd, MomentumMatchesHandUnroll) {
  const double lr = 0.1, wd = 0.01, mu = 0.9;
  Vector p{1.0};
  SgdState st;
  const double g1 = 0.5, g2 = -0.3;
  step(p, {g1}, {lr, wd, mu}, st);
  const double v1 = g1 + wd * 1.0;
  const double p1 = 1.0 - lr * v1;
  EXPECT_NEAR(p[0], p1, 1e-15);
  step(p, {g2}, {lr, wd, mu}, st);
  const double v2 = mu * v1 + (g2 + wd * p1);
  EXPECT_NEAR(p[0], p1 - lr * v2, 1e-15);
}

TEST(Sgd, ZeroLearningRateLeavesParameters) {
  Rng rng(51);
  Vector p = testkit::random_vector(rng, 10);
  const Vector before = p;
  SgdState st;
  step(p, testkit::random_vector(rng, 10), {0.0, 5e-4, 0.9}, st);
  EXPECT_EQ(p, before);
}

TEST(Sgd, NonFiniteGradientAbortsWholeStep) {
  Vector a{1.0, 2.0}, b{3.0};
  const Vector ga{0.1, 0.1};
  const Vector gb{std::numeric_limits<double>::infinity()};
  const ParamBlock blocks[] = {{a, ga}, {b, gb}};
  SgdState st;
  try {
    sgd_step(blocks, {}, st);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_EQ(e.index(), 1);
  }
  EXPECT_EQ(a, (Vector{1.0, 2.0}));
  EXPECT_EQ(b, (Vector{3.0}));
}

TEST(Sgd, ValidatesConfigAndShapes) {
  Vector p{1.0};
  SgdState st;
  EXPECT_THROW(step(p, {1.0}, {-1.0, 0.0, 0.0}, st), ContractError);
  EXPECT_THROW(step(p, {1.0}, {0.1, -1.0, 0.0}, st), ContractError);
  EXPECT_THROW(step(p, {1.0}, {0.1, 0.0, 1.0}, st), ContractError);
  EXPECT_THROW(step(p, {1.0, 2.0}, {}, st), ContractError);
}

TEST(Sgd, ConvexQuadraticDecreases) {
  // f(p) = 0.5 p^T diag(c) p, curvature bound max(c).
  Rng rng(52);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.uniform_index(8);
    Vector c(n), p = testkit::random_vector(rng, n);
    for (double& v : c) v = rng.uniform(0.1, 4.0);
    auto f = [&](const Vector& q) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += 0.5 * c[i] * q[i] * q[i];
      return s;
    };
    Vector g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = c[i] * p[i];
    const double before = f(p);
    SgdState st;
    step(p, g, {1.0 / 4.0, 0.0, 0.0}, st);
    EXPECT_LT(f(p), before);
  }
}

TEST(Sgd, RadiiAreNeverTouched) {
  Rng rng(53);
  ProxyBank bank = testkit::random_bank(rng, 3, 4);
  const Vector radii = bank.radii();
  SgdState st;
  for (int t = 0; t < 50; ++t) {
    const Matrix g = testkit::random_matrix(rng, 3, 4);
    const ParamBlock blocks[] = {{bank.weights().flat(), g.flat()}};
    sgd_step(blocks, {0.01, 5e-4, 0.5}, st);
  }
  EXPECT_EQ(bank.radii(), radii);
}
