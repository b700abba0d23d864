#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "robustnn/bounds.hpp"

using namespace robustnn;

TEST(Bounds, HighDimensionalBoundArithmetic) {
  BoundInputs b;
  b.m = 1;
  b.n2 = 10;
  b.n3 = 2;
  b.r = 1.0;
  b.tau = 0.5 * std::sqrt(0.8);
  EXPECT_NEAR(thm2_bound(b).value, std::pow(2.0, -7), 1e-15);
  b.tau = 0.0;
  EXPECT_NEAR(thm2_bound(b).value, std::pow(0.5, 8), 1e-15);
  b.m = 2;
  EXPECT_NEAR(thm2_bound(b).value, 2 * std::pow(0.5, 8), 1e-15);
  b.tau = 0.95;
  EXPECT_TRUE(thm2_bound(b).flagged);
}

TEST(Bounds, ImprovedBoundAndExactProbability) {
  EXPECT_NEAR(improved_bound(1, 0.1, 1.0, 3, 1), 0.0025, 1e-15);
  EXPECT_EQ(improved_bound(5, 0.0, 1.0, 3, 1), 0.0);
  EXPECT_ANY_THROW(improved_bound(1, 1.0, 1.0, 3, 1));
  // A line in R^3 misses a point at distance r by less than tau with
  // probability 1 - sqrt(1 - (tau/r)^2).
  EXPECT_NEAR(single_point_attack_probability(0.1, 1.0, 3, 1), 1 - std::sqrt(1 - 0.01), 1e-12);
  // With the rigorous constant the bound dominates the exact value.
  for (int n2 : {3, 8, 32})
    for (double e : {0.02, 0.05, 0.3}) {
      const double exact = single_point_attack_probability(e, 1.0, n2, 1);
      EXPECT_LE(exact, improved_bound(1, e, 1.0, n2, 1, 2.0 / std::sqrt(1 - e * e)) * (1 + 1e-12));
    }
}

TEST(Bounds, ToyAbstention) {
  EXPECT_DOUBLE_EQ(toy_abstention(0.0, 1.0, 7), 1.0);
  EXPECT_DOUBLE_EQ(toy_abstention(1.0, 1.0, 7), 0.0);
  EXPECT_DOUBLE_EQ(toy_abstention(0.5, 1.0, 1), 0.25);
  EXPECT_DOUBLE_EQ(toy_abstention(3.0, 1.0, 7), 0.0);
  double prev = 1.0;
  for (double tau = 0.0; tau <= 1.0; tau += 0.01) {
    const double v = toy_abstention(tau, 1.0, 20);
    EXPECT_LE(v, prev + 1e-15);
    prev = v;
  }
}

TEST(Bounds, ToyRobustAccuracy) {
  EXPECT_DOUBLE_EQ(toy_robust_accuracy(0.0, 1.0, 50.0, 10, RayConvention::directed_ray), 1.0);
  const double tau = 0.5, d = 1.0, r = 50.0;
  const std::size_t m = 200;
  const double dbar = d * (m + 3.0) / (2.0 * (m + 1.0));
  const double one = 1 - tau / (std::numbers::pi * r) * (1 - dbar / r);
  EXPECT_NEAR(toy_robust_accuracy(tau, d, r, m, RayConvention::directed_ray), one, 1e-15);
  EXPECT_NEAR(toy_robust_accuracy(tau, d, r, m, RayConvention::full_line), 1 - 2 * (1 - one), 1e-15);
  // Leading term for large r.
  EXPECT_NEAR(toy_robust_accuracy(tau, 1.0, 1e6, 1000000, RayConvention::directed_ray),
              1 - tau / (std::numbers::pi * 1e6), 1e-12);
  EXPECT_ANY_THROW(toy_robust_accuracy(1.5, 1.0, 50.0, 10, RayConvention::full_line));
}

TEST(Bounds, ToyOptimalThreshold) {
  const double c = 0.5;
  // pi c r / D = 1 / (2m) is inside the zero branch.
  const std::size_t m = 10;
  EXPECT_EQ(toy_optimal_tau(1.0, 1.0 / (2.0 * m * std::numbers::pi * c), m, c).tau, 0.0);
  const ToyOptimum opt = toy_optimal_tau(1.0, 100.0, 100, c);
  EXPECT_GT(opt.tau, 0.0);
  EXPECT_LT(opt.tau, 0.5);
  EXPECT_GE(opt.ratio, 1.0 / 3.0);
  EXPECT_LE(opt.ratio, 3.0);
  EXPECT_NEAR(opt.scale, std::log(std::numbers::pi * c * 100.0 * 100.0) / 100.0, 1e-15);
  // Stationarity of the leading-order objective, by finite differences.
  auto g = [&](double t) {
    return t / (std::numbers::pi * 100.0) + c * toy_abstention(t, 1.0, 100);
  };
  const double h = 1e-6;
  EXPECT_NEAR((g(opt.tau + h) - g(opt.tau - h)) / (2 * h), 0.0, 1e-5);
}

TEST(Bounds, SmallCalculators) {
  EXPECT_NEAR(lipschitz_bound_eadv(16, 2.0, 4, 1), 0.5, 1e-15);
  EXPECT_NEAR(lipschitz_bound_eadv(16, 4.0, 4, 1), 0.5 / 8, 1e-15);
  EXPECT_EQ(discontinuity_rate_bound(2.0, 16, 4, 10, 0.0), 0.0);
  EXPECT_NEAR(discontinuity_rate_bound(2.0, 16, 4, 20, 0.1), 2 * discontinuity_rate_bound(2.0, 16, 4, 10, 0.1), 1e-12);
  EXPECT_EQ(coverage_sample_bound(2, 1, 0.5), 6u);
  EXPECT_LT(coverage_sample_bound(2, 1, 0.5), coverage_sample_bound(2, 2, 0.5));
  EXPECT_LT(coverage_sample_bound(2, 1, 0.5), coverage_sample_bound(3, 1, 0.5));
  EXPECT_GT(coverage_sample_bound(2, 1, 0.25), coverage_sample_bound(2, 1, 0.5));
}

TEST(Bounds, SlopeAndWindowHelpers) {
  const PiecewiseConstantFn f(0.0, 1.0, {0.5}, {0.0, 1.0});
  EXPECT_NEAR(max_finite_difference_slope(f, {0.0, 0.25, 0.75, 1.0}), 2.0, 1e-15);
  const auto counts = breakpoint_window_counts(f, 1.0, 5, 3);
  ASSERT_EQ(counts.size(), 5u);
  for (auto k : counts) EXPECT_EQ(k, 1u);
}

TEST(Bounds, ToySimulationsAgreeWithClosedForms) {
  const ToyGeometry geom{1.0, 50.0, 40, 0.5};
  const auto mc = toy_abstention_mc(geom, {0.0, 0.1, 0.3}, 20000, 4);
  ASSERT_EQ(mc.size(), 3u);
  EXPECT_DOUBLE_EQ(mc[0].value, 1.0);
  EXPECT_NEAR(mc[1].value, toy_abstention(0.1, 1.0, 40), 0.015);
  EXPECT_NEAR(mc[2].value, toy_abstention(0.3, 1.0, 40), 0.015);
}

TEST(Bounds, CoverageFixtureSamplesAreWhereTheyShouldBe) {
  const CoverageFixture fx;
  Rng rng = make_rng(9);
  const LabeledDataset ds = fx.sample(2000, rng);
  std::size_t near = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Vector p = ds.point(i);
    bool in_ball = false;
    for (std::size_t b = 0; b < fx.balls; ++b) {
      Vector c = Vector::Zero(2);
      c(0) = static_cast<double>(b) * fx.spacing * fx.tau;
      in_ball = in_ball || (p - c).norm() <= fx.tau / 2;
    }
    near += in_ball;
    EXPECT_EQ(ds.label(i), 0);
  }
  EXPECT_NEAR(near / 2000.0, 1 - fx.delta, 0.02);
}
