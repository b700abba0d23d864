#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "robustnn/metrics.hpp"

namespace robustnn {

/// Arguments of the high-dimensional robust error bound. c_const and
/// c0_const stand in for unspecified absolute constants.
struct BoundInputs {
  std::size_t m = 1;
  double tau = 0.0;
  double r = 1.0;
  int n2 = 2;
  int n3 = 1;
  double c_const = 1.0;
  double c0_const = 0.5;
  void validate() const;
};

struct BoundValue {
  double value = 0.0;
  /// The bound's hypothesis (tau well below r) is violated or the value
  /// depends on constants that are only known up to order of magnitude.
  bool flagged = false;
  std::string note;
};

/// m (c tau / (r sqrt(1 - n3/n2)))^(n2-n3) + m c0^(n2-n3), in log space.
/// Flagged when tau >= r sqrt(1 - n3/n2).
BoundValue thm2_bound(const BoundInputs& b);

/// constant * (m/(n2-n3)) (tau/r)^(n2-n3) / B(n3/2, (n2-n3)/2). The
/// leading constant defaults to 1; the exact single-point probability is
/// about twice that for small tau/r. Throws for tau >= r.
double improved_bound(std::size_t m, double tau, double r, int n2, int n3, double constant = 1.0);

/// Probability that a Haar subspace of dimension n3 passes within tau of a
/// single point at distance r: the exact cap integral.
double single_point_attack_probability(double tau, double r, int n2, int n3);

/// Abstention rate of the two-segment example.
double toy_abstention(double tau, double D, std::size_t m);

enum class RayConvention { directed_ray, full_line };

/// Leading-order robust accuracy of the two-segment example,
/// 1 - (k tau / (pi r)) (1 - Dbar / r) with Dbar = D (m+3) / (2 (m+1)) and
/// k = 1 for a directed ray, 2 for a full line. Throws for tau > D.
double toy_robust_accuracy(double tau, double D, double r, std::size_t m, RayConvention convention);

struct ToyOptimum {
  double tau = 0.0;
  double scale = 0.0;  ///< D log(pi c r m / D) / m
  double ratio = 0.0;  ///< tau / scale (0 when tau = 0)
};

/// Optimal threshold of the two-segment example: 0 when pi c r / D <= 1/m,
/// otherwise the root on (0, D/2) of
///   -1/(pi r) + (2c/D) [(1 - tau/D)^m + (m-1)(1 - 2 tau/D)^m],
/// bisected to 1e-10 D.
ToyOptimum toy_optimal_tau(double D, double r, std::size_t m, double c);

/// m^((n3+1)/n2) / r^(n2-n3).
double lipschitz_bound_eadv(std::size_t m, double r, int n2, int n3);
/// kappa m^(1/n2) test_size w.
double discontinuity_rate_bound(double kappa, std::size_t m, int n2, std::size_t test_size, double w);
/// ceil((n2 N / beta) log(n2 N / beta)).
std::size_t coverage_sample_bound(int n2, std::size_t N, double beta);

/// Largest |f(b) - f(a)| / (b - a) between consecutive points of the grid.
double max_finite_difference_slope(const PiecewiseConstantFn& f, const std::vector<double>& grid);
/// Breakpoints of f inside `windows` random windows [a, a + w] within f's domain.
std::vector<std::size_t> breakpoint_window_counts(const PiecewiseConstantFn& f, double w,
                                                  std::size_t windows, std::uint64_t seed);

struct McEstimate {
  double value = 0.0;
  double ci95 = 0.0;
  std::size_t trials = 0;
};

/// Abstention of the two-segment example by simulation: every trial draws
/// a fresh training set and a fresh test point.
std::vector<McEstimate> toy_abstention_mc(const ToyGeometry& geom, const std::vector<double>& taus,
                                          std::size_t trials, std::uint64_t seed);

/// Robust accuracy of the two-segment example by simulation: fresh data,
/// test point and uniform direction per trial, attacked exactly.
McEstimate toy_robust_accuracy_mc(const ToyGeometry& geom, double tau, RayConvention convention,
                                  std::size_t trials, std::uint64_t seed);

/// E_adv(tau) + c D_nat(tau) of the two-segment example on a grid, with
/// common random numbers across the grid.
std::vector<McEstimate> toy_objective_mc(const ToyGeometry& geom, const std::vector<double>& taus,
                                         RayConvention convention, std::size_t trials,
                                         std::uint64_t seed);

/// N well-separated balls of radius tau/2 carrying mass 1 - delta in
/// equal shares; the remaining delta is spread uniformly over a far-away
/// box. All points carry label 0.
struct CoverageFixture {
  int n2 = 2;
  std::size_t balls = 10;
  double tau = 1.0;
  double delta = 0.05;
  double spacing = 10.0;  ///< distance between neighboring ball centers, in units of tau
  LabeledDataset sample(std::size_t count, Rng& rng) const;
};

/// Abstention of the tau-threshold model trained on m fresh draws,
/// measured on `test_points` further fresh draws.
double coverage_abstention_mc(const CoverageFixture& fixture, std::size_t m,
                              std::size_t test_points, std::uint64_t seed);

/// One row of the bound verification table.
struct BoundCheck {
  std::string bound_name;
  std::vector<std::pair<std::string, double>> inputs;
  double value = 0.0;
  double empirical = 0.0;
  double ci = 0.0;
  bool pass = false;
};

/// Evaluates every calculator on a fixed set of instances and compares it
/// with a Monte Carlo estimate. `effort` scales the trial counts.
std::vector<BoundCheck> verify_bounds(std::uint64_t seed, double effort = 1.0);

}  // namespace robustnn
