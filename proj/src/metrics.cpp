#include "robustnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

namespace robustnn {

namespace {

void require_nonempty(const LabeledDataset& test) {
  if (test.size() == 0) throw std::invalid_argument("test set is empty");
}

// Pair outcome slots: 0 = no success, 1 = success, 2 = aborted.
MetricsReport summarize(const std::vector<unsigned char>& slots, const RobustErrorOptions& o,
                        std::size_t test_size) {
  MetricsReport r;
  for (unsigned char s : slots) {
    if (s == 2) ++r.nonconverged;
    else {
      ++r.evaluations;
      r.successes += s;
    }
  }
  if (r.nonconverged > 0 && static_cast<double>(r.nonconverged) >= 1e-3 * static_cast<double>(slots.size())) {
    throw MetricsError("exact attack failed to converge on " + std::to_string(r.nonconverged) +
                       " of " + std::to_string(slots.size()) + " (point, subspace) pairs");
  }
  r.test_size = test_size;
  r.subspace_trials = o.trials;
  r.n3 = o.n3;
  r.seed = o.seed;
  r.adversary = o.kappa ? "kappa" : "uniform";
  r.e_adv_mean = r.evaluations ? static_cast<double>(r.successes) / static_cast<double>(r.evaluations) : 0.0;
  const BinomialInterval ci = binomial_ci95(r.successes, r.evaluations, o.ci);
  r.e_adv_ci95 = ci.half_width;
  r.e_adv_lower = ci.lower;
  r.e_adv_upper = ci.upper;
  return r;
}

template <typename Attack>
MetricsReport run_mc(const LabeledDataset& test, const RobustErrorOptions& options, int n2,
                     Attack&& attack) {
  require_nonempty(test);
  if (options.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (options.n3 < 1 || options.n3 >= n2) throw ConfigError("n3 must satisfy 1 <= n3 < n2");
  if (options.kappa && (options.kappa->config().ambient_dim != n2 ||
                        options.kappa->config().subspace_dim != options.n3)) {
    throw ConfigError("kappa sampler dimensions do not match the data");
  }
  const std::size_t total = test.size() * options.trials;
  std::vector<unsigned char> slots(total, 0);
  parallel_for(total, [&](std::size_t k) {
    const std::size_t i = k / options.trials;
    const std::size_t t = k % options.trials;
    Rng rng = make_rng(options.seed, i, t);
    const Subspace s = options.kappa ? options.kappa->sample(rng)
                                     : sample_uniform_subspace(n2, options.n3, rng);
    try {
      slots[k] = attack(test.point(i), test.label(i), s) ? 1 : 0;
    } catch (const AttackAborted&) {
      slots[k] = 2;
    }
  });
  return summarize(slots, options, test.size());
}

void check_curve(const PiecewiseConstantFn& f, bool increasing, const char* name) {
  const auto& v = f.values();
  for (std::size_t j = 0; j < v.size(); ++j) {
    const bool in_range = v[j] >= 0.0 && v[j] <= 1.0;
    const bool monotone = j == 0 || (increasing ? v[j] >= v[j - 1] : v[j] <= v[j - 1]);
    if (!in_range || !monotone) {
      throw std::logic_error(std::string(name) + " curve violates its monotone [0,1] contract");
    }
  }
}

}  // namespace

double natural_error(const RobustModel& model, const LabeledDataset& test) {
  require_nonempty(test);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < test.size(); ++i)
    errors += model.predict(test.point(i)).is_error_for(test.label(i)) ? 1 : 0;
  return static_cast<double>(errors) / static_cast<double>(test.size());
}

double abstention_rate(const RobustModel& model, const LabeledDataset& test) {
  require_nonempty(test);
  std::size_t abstained = 0;
  for (std::size_t i = 0; i < test.size(); ++i)
    abstained += model.predict(test.point(i)).abstained() ? 1 : 0;
  return static_cast<double>(abstained) / static_cast<double>(test.size());
}

BinomialInterval binomial_ci(std::size_t successes, std::size_t trials, CiMethod method,
                             double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
  if (trials == 0) return {0.0, 1.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double alpha = 1.0 - level;
  if (method == CiMethod::normal) {
    const double z = boost::math::quantile(boost::math::normal_distribution<>(), 1.0 - alpha / 2);
    const double h = z * std::sqrt(p * (1.0 - p) / n);
    return {std::max(0.0, p - h), std::min(1.0, p + h), h};
  }
  const double x = static_cast<double>(successes);
  const double lower =
      successes == 0 ? 0.0
                     : boost::math::quantile(boost::math::beta_distribution<>(x, n - x + 1.0), alpha / 2);
  const double upper = successes == trials
                           ? 1.0
                           : boost::math::quantile(boost::math::beta_distribution<>(x + 1.0, n - x),
                                                   1.0 - alpha / 2);
  return {lower, upper, std::max(p - lower, upper - p)};
}

BinomialInterval binomial_ci95(std::size_t successes, std::size_t trials, CiMethod method) {
  return binomial_ci(successes, trials, method, 0.95);
}

MetricsReport robust_error_mc(const RobustModel& model, const LabeledDataset& test,
                              const RobustErrorOptions& options) {
  MetricsReport r = run_mc(test, options, model.train().dim(),
                           [&](const Vector& x, int y, const Subspace& s) {
                             return exact_attack(model, x, y, s, options.attack).succeeded();
                           });
  r.e_nat = natural_error(model, test);
  r.d_nat = abstention_rate(model, test);
  return r;
}

MetricsReport robust_error_mc(const LinearModel& model, const LabeledDataset& test,
                              const RobustErrorOptions& options) {
  MetricsReport r = run_mc(test, options, static_cast<int>(model.weights.cols()),
                           [&](const Vector& x, int y, const Subspace& s) {
                             return attack_linear_exact(model, x, y, s);
                           });
  std::size_t errors = 0;
  for (std::size_t i = 0; i < test.size(); ++i) errors += model.predict(test.point(i)) != test.label(i);
  r.e_nat = static_cast<double>(errors) / static_cast<double>(test.size());
  r.d_nat = 0.0;
  r.adversary += "/linear";
  return r;
}

std::vector<Subspace> sample_subspaces(int n2, int n3, std::size_t count, std::uint64_t seed) {
  std::vector<Subspace> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng = make_rng(seed, 0, k);
    out.push_back(sample_uniform_subspace(n2, n3, rng));
  }
  return out;
}

TauCurves curves_vs_tau(const RobustModel& model, const LabeledDataset& test,
                        const std::vector<Subspace>& subspaces, double c,
                        const CurveDomain& domain, const AttackOptions& attack) {
  require_nonempty(test);
  if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("trade-off constant c must be >= 0");
  const LabeledDataset& train = model.train();
  const std::size_t n = test.size();
  const std::size_t per_point = subspaces.size();

  std::vector<double> nn(n);
  std::vector<double> crit(n * per_point);
  parallel_for(n, [&](std::size_t i) {
    const Vector x = test.point(i);
    nn[i] = nearest_neighbor(train, x).distance;
    for (std::size_t k = 0; k < per_point; ++k) {
      crit[i * per_point + k] = critical_threshold(train, x, test.label(i), subspaces[k], attack);
    }
  });

  double hi = 0.0;
  if (domain.hi) {
    hi = *domain.hi;
  } else {
    for (double v : nn) if (std::isfinite(v)) hi = std::max(hi, v);
    for (double v : crit) if (std::isfinite(v)) hi = std::max(hi, v);
    hi = hi > 0.0 ? 2.0 * hi : 1.0;
  }
  if (!(hi > domain.lo)) throw ConfigError("curve domain must satisfy lo < hi");

  PiecewiseConstantFn e_adv =
      per_point == 0 ? PiecewiseConstantFn::constant(domain.lo, hi, 0.0)
                     : PiecewiseConstantFn::counting(domain.lo, hi, crit,
                                                     static_cast<double>(crit.size()));
  PiecewiseConstantFn d_nat =
      PiecewiseConstantFn::counting(domain.lo, hi, nn, static_cast<double>(n), true);
  check_curve(e_adv, true, "E_adv");
  check_curve(d_nat, false, "D_nat");
  PiecewiseConstantFn g =
      PiecewiseConstantFn::combine(e_adv, d_nat, [c](double e, double d) { return e + c * d; });
  return {std::move(e_adv), std::move(d_nat), std::move(g)};
}

TauCurves curves_vs_tau(const LabeledDataset& train, double sigma, const LabeledDataset& test,
                        const std::vector<Subspace>& subspaces, double c,
                        const CurveDomain& domain, const AttackOptions& attack) {
  const RobustModel model = RobustModel::build(train, {0.0, sigma});
  return curves_vs_tau(model, test, subspaces, c, domain, attack);
}

}  // namespace robustnn
