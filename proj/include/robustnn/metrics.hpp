#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "robustnn/attack.hpp"
#include "robustnn/piecewise.hpp"

namespace robustnn {

/// Fraction of test points that receive a wrong, non-abstaining label.
double natural_error(const RobustModel& model, const LabeledDataset& test);
/// Fraction of test points on which the model abstains.
double abstention_rate(const RobustModel& model, const LabeledDataset& test);

enum class CiMethod { normal, clopper_pearson };

struct BinomialInterval {
  double lower = 0.0;
  double upper = 0.0;
  double half_width = 0.0;  ///< normal: 1.96 sqrt(p(1-p)/n); exact: max distance to p
};

/// Two-sided interval for a success proportion at the given confidence level.
BinomialInterval binomial_ci(std::size_t successes, std::size_t trials, CiMethod method,
                             double level);
/// 95% interval for a success proportion.
BinomialInterval binomial_ci95(std::size_t successes, std::size_t trials,
                               CiMethod method = CiMethod::normal);

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RobustErrorOptions {
  int n3 = 1;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  /// Subspaces come from this sampler instead of the Haar distribution.
  std::optional<KappaBoundedSampler> kappa;
  CiMethod ci = CiMethod::normal;
  AttackOptions attack;
};

struct MetricsReport {
  double e_nat = 0.0;
  double d_nat = 0.0;
  double e_adv_mean = 0.0;
  double e_adv_ci95 = 0.0;
  double e_adv_lower = 0.0;
  double e_adv_upper = 0.0;
  std::size_t successes = 0;
  std::size_t evaluations = 0;  ///< (point, subspace) pairs counted in the mean
  std::size_t subspace_trials = 0;
  std::size_t test_size = 0;
  std::size_t nonconverged = 0;  ///< pairs whose attack aborted (excluded)
  int n3 = 1;
  std::uint64_t seed = 0;
  std::string adversary = "uniform";
};

/// Monte Carlo robust error: every test point is attacked with `trials`
/// independently sampled subspaces. The subspace for (point i, trial t) is
/// drawn from make_rng(seed, i, t), so the report does not depend on the
/// worker count. Aborted attacks are excluded when they make up less than
/// 0.1% of the pairs; otherwise MetricsError is thrown.
MetricsReport robust_error_mc(const RobustModel& model, const LabeledDataset& test,
                              const RobustErrorOptions& options);

/// The same protocol against the ridge baseline (which never abstains).
MetricsReport robust_error_mc(const LinearModel& model, const LabeledDataset& test,
                              const RobustErrorOptions& options);

std::vector<Subspace> sample_subspaces(int n2, int n3, std::size_t count, std::uint64_t seed);

struct TauCurves {
  PiecewiseConstantFn e_adv;
  PiecewiseConstantFn d_nat;
  PiecewiseConstantFn g;
};

struct CurveDomain {
  double lo = 0.0;
  /// Upper end; defaults to twice the largest finite breakpoint (or 1).
  std::optional<double> hi;
};

/// Exact curves over tau for a fixed list of subspaces. Each test point is
/// paired with every subspace; E_adv(tau) is the fraction of pairs whose
/// critical threshold lies strictly below tau and D_nat(tau) the fraction
/// of points whose nearest-neighbor distance is at least tau.
/// g = E_adv + c D_nat.
TauCurves curves_vs_tau(const LabeledDataset& train, double sigma, const LabeledDataset& test,
                        const std::vector<Subspace>& subspaces, double c,
                        const CurveDomain& domain = {}, const AttackOptions& attack = {});

/// Same, on an already separated training set.
TauCurves curves_vs_tau(const RobustModel& model, const LabeledDataset& test,
                        const std::vector<Subspace>& subspaces, double c,
                        const CurveDomain& domain = {}, const AttackOptions& attack = {});

}  // namespace robustnn
