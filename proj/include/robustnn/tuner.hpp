#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "robustnn/metrics.hpp"

namespace robustnn {

/// Continuous exponential forecaster over tau in [lo, hi]. The weight of
/// tau is exp(lambda * cumulative_utility(tau)), kept exactly as a step
/// function.
struct ForecasterState {
  double lambda = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  PiecewiseConstantFn cumulative_utility = PiecewiseConstantFn::constant(0.0, 1.0, 0.0);
  std::size_t round = 1;
};

ForecasterState ef_init(double lo, double hi, double lambda);

/// Probability of each piece of the cumulative utility, computed with a
/// shared max-shift so that no weight overflows.
std::vector<double> ef_piece_probabilities(const ForecasterState& state);
/// Sampling density at tau (integrates to 1 over the domain).
double ef_density(const ForecasterState& state, double tau);

double ef_sample(const ForecasterState& state, Rng& rng);
double ef_sample(const ForecasterState& state, std::uint64_t seed);

/// Adds a utility with values in [0, 1] and advances the round. The
/// utility's domain must contain the forecaster's domain.
ForecasterState ef_update(ForecasterState state, const PiecewiseConstantFn& utility);

/// sqrt(ln(1000) / T): the width-(hi-lo)/1000 choice for a one-dimensional
/// domain.
double default_lambda(std::size_t rounds);

/// u = 1 - (E_adv + c D_nat) / (1 + c), clamped to [0, 1].
PiecewiseConstantFn utility_from_objective(const PiecewiseConstantFn& g, double c);

/// Default tau domain: [0, 2 * largest leave-one-out nearest-neighbor
/// distance on the training set].
std::pair<double, double> default_tau_domain(const LabeledDataset& train);

struct OnlineConfig {
  double sigma = 0.0;
  int n3 = 1;
  std::size_t subspaces_per_batch = 1;
  std::optional<double> lambda;  ///< default_lambda(T) when unset
  double c = 0.5;
  std::uint64_t seed = 0;
  std::optional<std::pair<double, double>> domain;
  AttackOptions attack;
};

struct OnlineResult {
  double lambda = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> tau_history;
  std::vector<PiecewiseConstantFn> utilities;   ///< u_t
  std::vector<PiecewiseConstantFn> objectives;  ///< g_t
  std::vector<double> realized_utility;         ///< u_t(tau_t)
  std::vector<double> regret_curve;             ///< regret after rounds 1..T
  PiecewiseConstantFn cumulative_utility = PiecewiseConstantFn::constant(0.0, 1.0, 0.0);
};

/// Runs the forecaster over the given batches. Round t samples tau_t
/// (seed stream 2) before building u_t from curves_vs_tau on batch t with
/// freshly sampled subspaces (seed stream 1).
OnlineResult run_online(const LabeledDataset& train, const std::vector<LabeledDataset>& batches,
                        const OnlineConfig& config);

struct BatchThreshold {
  std::vector<double> support;  ///< tau_hat is uniform over these values
  double expected_g = 0.0;      ///< mean of g at the support points
  double min_g = 0.0;           ///< best fixed-tau value of g
  double best_tau = 0.0;
  double gap = 0.0;             ///< expected_g - min_g
};

/// Randomized threshold from a single validation curve.
BatchThreshold online_to_batch(const std::vector<double>& tau_history,
                               const PiecewiseConstantFn& validation_g);

/// Randomized threshold scored against the per-round objectives: the
/// expected value is the average of g_t(tau_t) and the comparator is the
/// minimum of the averaged curve. With u_t affine in g_t, the gap equals
/// (1 + c) * regret(T) / T.
BatchThreshold online_to_batch(const std::vector<double>& tau_history,
                               const std::vector<PiecewiseConstantFn>& round_objectives);

struct GridCell {
  double tau = 0.0;
  double sigma = 0.0;
  bool valid = false;
  double g = 0.0;
};

struct GridTuneResult {
  double tau = 0.0;
  double sigma = 0.0;
  double g = 0.0;
  std::vector<GridCell> cells;  ///< sigma-major order
};

/// Exact g(tau, sigma) on the grid. Sigma values that empty the training
/// set are marked invalid. Ties go to the smallest sigma, then tau.
GridTuneResult tune_tau_sigma_grid(const LabeledDataset& train, const LabeledDataset& test,
                                   const std::vector<Subspace>& subspaces, double c,
                                   std::vector<double> tau_grid, std::vector<double> sigma_grid,
                                   const AttackOptions& attack = {});

}  // namespace robustnn
