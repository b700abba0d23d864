#include "robustnn/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace robustnn {

ForecasterState ef_init(double lo, double hi, double lambda) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw ConfigError("forecaster domain must satisfy lo < hi");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
  return {lambda, lo, hi, PiecewiseConstantFn::constant(lo, hi, 0.0), 1};
}

std::vector<double> ef_piece_probabilities(const ForecasterState& state) {
  const auto pieces = state.cumulative_utility.pieces();
  const double top = state.cumulative_utility.max_value();
  std::vector<double> mass;
  mass.reserve(pieces.size());
  double total = 0.0;
  for (const auto& p : pieces) {
    const double w = (p.right - p.left) * std::exp(state.lambda * (p.value - top));
    mass.push_back(w);
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::logic_error("forecaster weights lost all mass");
  }
  for (double& w : mass) w /= total;
  return mass;
}

double ef_density(const ForecasterState& state, double tau) {
  if (tau < state.lo || tau > state.hi) return 0.0;
  const auto pieces = state.cumulative_utility.pieces();
  const auto probs = ef_piece_probabilities(state);
  const std::size_t j = state.cumulative_utility.piece_index(tau);
  const double length = pieces[j].right - pieces[j].left;
  return length > 0.0 ? probs[j] / length : 0.0;
}

double ef_sample(const ForecasterState& state, Rng& rng) {
  const auto pieces = state.cumulative_utility.pieces();
  const auto probs = ef_piece_probabilities(state);
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  const auto& p = pieces[pick(rng)];
  std::uniform_real_distribution<double> within(p.left, p.right);
  return p.right > p.left ? within(rng) : p.right;
}

double ef_sample(const ForecasterState& state, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return ef_sample(state, rng);
}

ForecasterState ef_update(ForecasterState state, const PiecewiseConstantFn& utility) {
  if (utility.lo() > state.lo || utility.hi() < state.hi) {
    throw std::invalid_argument("utility domain does not cover the forecaster domain");
  }
  for (double v : utility.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("utility values must lie in [0, 1]");
  }
  const PiecewiseConstantFn u = (utility.lo() == state.lo && utility.hi() == state.hi)
                                    ? utility
                                    : utility.restricted(state.lo, state.hi);
  state.cumulative_utility = state.cumulative_utility + u;
  ++state.round;
  return state;
}

double default_lambda(std::size_t rounds) {
  if (rounds == 0) throw ConfigError("need at least one round");
  return std::sqrt(std::log(1000.0) / static_cast<double>(rounds));
}

PiecewiseConstantFn utility_from_objective(const PiecewiseConstantFn& g, double c) {
  return g.map([c](double v) { return std::clamp(1.0 - v / (1.0 + c), 0.0, 1.0); });
}

std::pair<double, double> default_tau_domain(const LabeledDataset& train) {
  double widest = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Vector x = train.point(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < train.size(); ++j)
      if (j != i) best = std::min(best, squared_distance(train, j, x));
    if (std::isfinite(best)) widest = std::max(widest, std::sqrt(best));
  }
  return {0.0, widest > 0.0 ? 2.0 * widest : 1.0};
}

OnlineResult run_online(const LabeledDataset& train, const std::vector<LabeledDataset>& batches,
                        const OnlineConfig& config) {
  if (batches.empty()) throw std::invalid_argument("the test stream is empty");
  const RobustModel model = RobustModel::build(train, {0.0, config.sigma});
  const auto [lo, hi] = config.domain ? *config.domain : default_tau_domain(model.train());
  OnlineResult out;
  out.lambda = config.lambda ? *config.lambda : default_lambda(batches.size());
  out.lo = lo;
  out.hi = hi;
  ForecasterState state = ef_init(lo, hi, out.lambda);
  double realized = 0.0;
  for (std::size_t t = 0; t < batches.size(); ++t) {
    const double tau = ef_sample(state, derive_seed(config.seed, 2, t));
    const auto subspaces = sample_subspaces(train.dim(), config.n3, config.subspaces_per_batch,
                                            derive_seed(config.seed, 1, t));
    TauCurves curves = curves_vs_tau(model, batches[t], subspaces, config.c, {lo, hi}, config.attack);
    PiecewiseConstantFn u = utility_from_objective(curves.g, config.c);
    const double gained = u(tau);
    realized += gained;
    state = ef_update(std::move(state), u);
    out.tau_history.push_back(tau);
    out.realized_utility.push_back(gained);
    out.regret_curve.push_back(state.cumulative_utility.max_value() - realized);
    out.utilities.push_back(std::move(u));
    out.objectives.push_back(std::move(curves.g));
  }
  out.cumulative_utility = state.cumulative_utility;
  return out;
}

BatchThreshold online_to_batch(const std::vector<double>& tau_history,
                               const PiecewiseConstantFn& validation_g) {
  if (tau_history.empty()) throw std::invalid_argument("threshold history is empty");
  BatchThreshold out;
  out.support = tau_history;
  double sum = 0.0;
  for (double tau : tau_history) sum += validation_g(tau);
  out.expected_g = sum / static_cast<double>(tau_history.size());
  out.min_g = validation_g.min_value();
  out.best_tau = validation_g.argmin();
  out.gap = out.expected_g - out.min_g;
  return out;
}

BatchThreshold online_to_batch(const std::vector<double>& tau_history,
                               const std::vector<PiecewiseConstantFn>& round_objectives) {
  if (tau_history.empty()) throw std::invalid_argument("threshold history is empty");
  if (round_objectives.size() != tau_history.size()) {
    throw std::invalid_argument("need one objective per round");
  }
  const double rounds = static_cast<double>(tau_history.size());
  PiecewiseConstantFn total = round_objectives.front();
  double realized = round_objectives.front()(tau_history.front());
  for (std::size_t t = 1; t < tau_history.size(); ++t) {
    total = total + round_objectives[t];
    realized += round_objectives[t](tau_history[t]);
  }
  BatchThreshold out;
  out.support = tau_history;
  out.expected_g = realized / rounds;
  out.min_g = total.min_value() / rounds;
  out.best_tau = total.argmin();
  out.gap = out.expected_g - out.min_g;
  return out;
}

GridTuneResult tune_tau_sigma_grid(const LabeledDataset& train, const LabeledDataset& test,
                                   const std::vector<Subspace>& subspaces, double c,
                                   std::vector<double> tau_grid, std::vector<double> sigma_grid,
                                   const AttackOptions& attack) {
  if (tau_grid.empty() || sigma_grid.empty()) throw ConfigError("grids must be nonempty");
  for (double s : sigma_grid)
    if (!(s >= 0.0)) throw ConfigError("sigma values must be >= 0");
  for (double t : tau_grid)
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("tau values must be finite and >= 0");
  std::sort(tau_grid.begin(), tau_grid.end());
  std::sort(sigma_grid.begin(), sigma_grid.end());
  const double hi = tau_grid.back() + 1.0;

  GridTuneResult out;
  bool found = false;
  for (double sigma : sigma_grid) {
    std::optional<TauCurves> curves;
    try {
      const RobustModel model = RobustModel::build(train, {0.0, sigma});
      curves = curves_vs_tau(model, test, subspaces, c, {0.0, hi}, attack);
    } catch (const EmptyModelError&) {
    }
    for (double tau : tau_grid) {
      GridCell cell{tau, sigma, curves.has_value(), curves ? curves->g(tau) : 0.0};
      out.cells.push_back(cell);
      if (cell.valid && (!found || cell.g < out.g)) {
        out.tau = tau;
        out.sigma = sigma;
        out.g = cell.g;
        found = true;
      }
    }
  }
  if (!found) throw EmptyModelError("every sigma in the grid empties the training set");
  return out;
}

}  // namespace robustnn
