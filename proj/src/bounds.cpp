#include "robustnn/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace robustnn {

namespace {

constexpr double kPi = std::numbers::pi;

void require_dims(int n2, int n3) {
  if (n3 < 1 || n3 >= n2) throw ConfigError("dimensions must satisfy 1 <= n3 < n2");
}

McEstimate proportion(std::size_t hits, std::size_t trials) {
  const BinomialInterval ci = binomial_ci95(hits, trials);
  return {static_cast<double>(hits) / static_cast<double>(trials), ci.half_width, trials};
}

// Test point drawn uniformly from a random class segment.
std::pair<Vector, int> toy_test_point(const ToyGeometry& g, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int label = unit(rng) < 0.5 ? 0 : 1;
  const double offset = label == 0 ? 0.0 : g.segment_length + g.gap;
  Vector x(2);
  x << offset + unit(rng) * g.segment_length, 0.0;
  return {x, label};
}

Subspace random_direction(Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  const double theta = angle(rng);
  Matrix b(2, 1);
  b << std::cos(theta), std::sin(theta);
  return Subspace(b);
}

}  // namespace

void BoundInputs::validate() const {
  if (m < 1) throw ConfigError("m must be >= 1");
  if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
  if (!(r > 0.0)) throw ConfigError("r must be > 0");
  require_dims(n2, n3);
  if (!(c_const > 0.0)) throw ConfigError("c must be > 0");
  if (!(c0_const > 0.0 && c0_const < 1.0)) throw ConfigError("c0 must lie in (0, 1)");
}

BoundValue thm2_bound(const BoundInputs& b) {
  b.validate();
  const double k = static_cast<double>(b.n2 - b.n3);
  const double shrink = std::sqrt(1.0 - static_cast<double>(b.n3) / b.n2);
  const double log_m = std::log(static_cast<double>(b.m));
  const double log_tail = log_m + k * std::log(b.c0_const);
  double log_value = log_tail;
  if (b.tau > 0.0) {
    const double log_head = log_m + k * std::log(b.c_const * b.tau / (b.r * shrink));
    const double top = std::max(log_head, log_tail);
    log_value = top + std::log(std::exp(log_head - top) + std::exp(log_tail - top));
  }
  BoundValue out{std::exp(log_value), true, "absolute constants c and c0 are placeholders"};
  if (b.tau >= b.r * shrink) out.note = "tau >= r sqrt(1 - n3/n2): outside the bound's regime";
  return out;
}

double improved_bound(std::size_t m, double tau, double r, int n2, int n3, double constant) {
  require_dims(n2, n3);
  if (!(tau >= 0.0) || !(r > 0.0)) throw ConfigError("need tau >= 0 and r > 0");
  if (tau >= r) throw ConfigError("improved bound requires tau < r");
  if (tau == 0.0) return 0.0;
  const double k = static_cast<double>(n2 - n3);
  const double log_value = std::log(constant * static_cast<double>(m) / k) + k * std::log(tau / r) -
                           log_beta(0.5 * n3, 0.5 * k);
  return std::exp(log_value);
}

double single_point_attack_probability(double tau, double r, int n2, int n3) {
  require_dims(n2, n3);
  if (!(r > 0.0)) throw ConfigError("r must be > 0");
  if (tau >= r) return 1.0;
  // The distance from the point to a random n3-subspace is r times the
  // norm of n2 - n3 coordinates of a uniform unit vector.
  return sphere_cap_fraction(n2, n2 - n3, tau / r);
}

double toy_abstention(double tau, double D, std::size_t m) {
  if (!(tau >= 0.0) || !(D > 0.0)) throw ConfigError("need tau >= 0 and D > 0");
  if (tau > D) return 0.0;
  const double e = static_cast<double>(m) + 1.0;
  double bracket = 2.0 * std::pow(1.0 - tau / D, e);
  if (tau <= D / 2.0) bracket += (static_cast<double>(m) - 1.0) * std::pow(1.0 - 2.0 * tau / D, e);
  return bracket / e;
}

double toy_robust_accuracy(double tau, double D, double r, std::size_t m, RayConvention convention) {
  if (!(tau >= 0.0) || !(D > 0.0) || !(r > 0.0)) throw ConfigError("need tau >= 0, D > 0, r > 0");
  if (tau > D) throw ConfigError("toy robust accuracy formula holds for tau <= D only");
  const double md = static_cast<double>(m);
  const double mean_offset = D * (md + 3.0) / (2.0 * (md + 1.0));
  const double k = convention == RayConvention::directed_ray ? 1.0 : 2.0;
  return 1.0 - (k * tau / (kPi * r)) * (1.0 - mean_offset / r);
}

ToyOptimum toy_optimal_tau(double D, double r, std::size_t m, double c) {
  if (!(D > 0.0) || !(r > 0.0) || !(c > 0.0) || m < 1) {
    throw ConfigError("need D, r, c > 0 and m >= 1");
  }
  const double md = static_cast<double>(m);
  ToyOptimum out;
  out.scale = D * std::log(kPi * c * r * md / D) / md;
  if (kPi * c * r / D <= 1.0 / md) return out;

  auto slope = [&](double tau) {
    return -1.0 / (kPi * r) +
           (2.0 * c / D) * (std::pow(1.0 - tau / D, md) + (md - 1.0) * std::pow(1.0 - 2.0 * tau / D, md));
  };
  double lo = 0.0, hi = D / 2.0;
  if (!(slope(lo) > 0.0) || !(slope(hi) < 0.0)) {
    throw std::runtime_error("toy optimal tau: derivative does not change sign on (0, D/2); "
                             "slope(0) = " + std::to_string(slope(lo)) +
                             ", slope(D/2) = " + std::to_string(slope(hi)) +
                             " (m too small for the asymptotic regime)");
  }
  while (hi - lo > 1e-10 * D) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  out.tau = 0.5 * (lo + hi);
  out.ratio = out.scale > 0.0 ? out.tau / out.scale : 0.0;
  return out;
}

double lipschitz_bound_eadv(std::size_t m, double r, int n2, int n3) {
  require_dims(n2, n3);
  if (!(r > 0.0)) throw ConfigError("r must be > 0");
  return std::pow(static_cast<double>(m), static_cast<double>(n3 + 1) / n2) / std::pow(r, n2 - n3);
}

double discontinuity_rate_bound(double kappa, std::size_t m, int n2, std::size_t test_size, double w) {
  if (!(w >= 0.0) || !(kappa > 0.0) || n2 < 1) throw ConfigError("need w >= 0, kappa > 0, n2 >= 1");
  return kappa * std::pow(static_cast<double>(m), 1.0 / n2) * static_cast<double>(test_size) * w;
}

std::size_t coverage_sample_bound(int n2, std::size_t N, double beta) {
  if (n2 < 1 || N < 1 || !(beta > 0.0 && beta < 1.0)) {
    throw ConfigError("need n2 >= 1, N >= 1 and beta in (0, 1)");
  }
  const double x = static_cast<double>(n2) * static_cast<double>(N) / beta;
  return static_cast<std::size_t>(std::ceil(x * std::log(x)));
}

double max_finite_difference_slope(const PiecewiseConstantFn& f, const std::vector<double>& grid) {
  double best = 0.0;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double h = grid[j] - grid[j - 1];
    if (h <= 0.0) throw std::invalid_argument("grid must be strictly increasing");
    best = std::max(best, std::abs(f(grid[j]) - f(grid[j - 1])) / h);
  }
  return best;
}

std::vector<std::size_t> breakpoint_window_counts(const PiecewiseConstantFn& f, double w,
                                                  std::size_t windows, std::uint64_t seed) {
  if (!(w > 0.0) || w > f.hi() - f.lo()) throw std::invalid_argument("window must fit in the domain");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> start(f.lo(), f.hi() - w);
  const auto& bps = f.breakpoints();
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < windows; ++k) {
    const double a = start(rng);
    const auto first = std::lower_bound(bps.begin(), bps.end(), a);
    const auto last = std::upper_bound(bps.begin(), bps.end(), a + w);
    out.push_back(static_cast<std::size_t>(last - first));
  }
  return out;
}

std::vector<McEstimate> toy_abstention_mc(const ToyGeometry& geom, const std::vector<double>& taus,
                                          std::size_t trials, std::uint64_t seed) {
  geom.validate();
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  std::vector<double> nn(trials);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng = make_rng(seed, 0, t);
    const LabeledDataset train = gen_toy_segments(geom, rng);
    const auto [x, label] = toy_test_point(geom, rng);
    nn[t] = nearest_neighbor(train, x).distance;
  });
  std::vector<McEstimate> out;
  for (double tau : taus) {
    const auto hits = static_cast<std::size_t>(
        std::count_if(nn.begin(), nn.end(), [tau](double d) { return d >= tau; }));
    out.push_back(proportion(hits, trials));
  }
  return out;
}

McEstimate toy_robust_accuracy_mc(const ToyGeometry& geom, double tau, RayConvention convention,
                                  std::size_t trials, std::uint64_t seed) {
  geom.validate();
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  AttackOptions options;
  options.directed_ray = convention == RayConvention::directed_ray;
  std::vector<unsigned char> robust(trials, 0);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng = make_rng(seed, 1, t);
    const LabeledDataset train = gen_toy_segments(geom, rng);
    const auto [x, label] = toy_test_point(geom, rng);
    const Subspace s = random_direction(rng);
    robust[t] = exact_attack(train, x, label, s, tau, options).succeeded() ? 0 : 1;
  });
  return proportion(static_cast<std::size_t>(std::count(robust.begin(), robust.end(), 1)), trials);
}

std::vector<McEstimate> toy_objective_mc(const ToyGeometry& geom, const std::vector<double>& taus,
                                         RayConvention convention, std::size_t trials,
                                         std::uint64_t seed) {
  geom.validate();
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  AttackOptions options;
  options.directed_ray = convention == RayConvention::directed_ray;
  std::vector<double> nn(trials), crit(trials);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng = make_rng(seed, 2, t);
    const LabeledDataset train = gen_toy_segments(geom, rng);
    const auto [x, label] = toy_test_point(geom, rng);
    const Subspace s = random_direction(rng);
    nn[t] = nearest_neighbor(train, x).distance;
    crit[t] = critical_threshold(train, x, label, s, options);
  });
  const double c = geom.tradeoff;
  const double n = static_cast<double>(trials);
  std::vector<McEstimate> out;
  for (double tau : taus) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const double v = (tau > crit[t] ? 1.0 : 0.0) + (nn[t] >= tau ? c : 0.0);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    out.push_back({mean, 1.96 * std::sqrt(var / n), trials});
  }
  return out;
}

LabeledDataset CoverageFixture::sample(std::size_t count, Rng& rng) const {
  if (n2 < 1 || balls < 1 || !(tau > 0.0) || !(delta >= 0.0 && delta < 1.0)) {
    throw ConfigError("invalid coverage fixture");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> pick(0, balls - 1);
  const double noise_origin = 2.0 * spacing * tau * static_cast<double>(balls);
  const double noise_side = 1000.0 * tau;
  FeatureMatrix f(static_cast<Eigen::Index>(count), n2);
  for (std::size_t i = 0; i < count; ++i) {
    Vector p = Vector::Zero(n2);
    if (unit(rng) < delta) {
      for (int d = 0; d < n2; ++d) p(d) = noise_origin + noise_side * unit(rng);
    } else {
      Vector dir(n2);
      for (int d = 0; d < n2; ++d) dir(d) = normal(rng);
      dir.normalize();
      const double radius = 0.5 * tau * std::pow(unit(rng), 1.0 / n2);
      p = radius * dir;
      p(0) += spacing * tau * static_cast<double>(pick(rng));
    }
    f.row(static_cast<Eigen::Index>(i)) = p.transpose();
  }
  return LabeledDataset(std::move(f), std::vector<int>(count, 0));
}

double coverage_abstention_mc(const CoverageFixture& fixture, std::size_t m,
                              std::size_t test_points, std::uint64_t seed) {
  if (m == 0 || test_points == 0) throw std::invalid_argument("need m >= 1 and test points >= 1");
  Rng train_rng = make_rng(seed, 0);
  Rng test_rng = make_rng(seed, 1);
  const LabeledDataset train = fixture.sample(m, train_rng);
  const LabeledDataset test = fixture.sample(test_points, test_rng);
  return abstention_rate(RobustModel::build(train, {fixture.tau, 0.0}), test);
}

std::vector<BoundCheck> verify_bounds(std::uint64_t seed, double effort) {
  if (!(effort > 0.0)) throw ConfigError("effort must be positive");
  auto scaled = [effort](double n) { return std::max<std::size_t>(1, static_cast<std::size_t>(n * effort)); };
  std::vector<BoundCheck> rows;

  {  // exact cap fraction against uniform sphere points
    const int n = 10, k = 3;
    const double eps = 0.3;
    const std::size_t trials = scaled(2e5);
    Rng rng = make_rng(seed, 10);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const Vector v = sample_unit_vector(n, rng);
      hits += v.head(k).norm() <= eps ? 1 : 0;
    }
    const McEstimate mc = proportion(hits, trials);
    const double exact = sphere_cap_fraction(n, k, eps);
    const double upper = sphere_cap_fraction(n, k, eps, CapMode::upper_bound);
    rows.push_back({"sphere_cap_fraction", {{"n", n}, {"k", k}, {"eps", eps}}, exact, mc.value, mc.ci95,
                    std::abs(mc.value - exact) <= mc.ci95 + 1e-12 && exact <= upper});
  }
  {  // single opposite point: exact cap probability, improved and Theorem 2 bounds
    const int n2 = 3, n3 = 1;
    const double r = 1.0, tau = 0.1;
    const std::size_t trials = scaled(2e5);
    FeatureMatrix f(1, n2);
    f << r, 0.0, 0.0;
    const LabeledDataset train(f, {1});
    FeatureMatrix fx = FeatureMatrix::Zero(1, n2);
    const LabeledDataset test(fx, {0});
    RobustErrorOptions options;
    options.n3 = n3;
    options.trials = trials;
    options.seed = derive_seed(seed, 11);
    const MetricsReport rep = robust_error_mc(RobustModel::build(train, {tau, 0.0}), test, options);
    const double exact = single_point_attack_probability(tau, r, n2, n3);
    const std::vector<std::pair<std::string, double>> in{{"m", 1}, {"tau", tau}, {"r", r}, {"n2", n2}, {"n3", n3}};
    rows.push_back({"single_point_attack_probability", in, exact, rep.e_adv_mean, rep.e_adv_ci95,
                    std::abs(rep.e_adv_mean - exact) <= rep.e_adv_ci95 + 1e-12});
    // 2 / sqrt(1 - (tau/r)^2) is the smallest leading constant that makes
    // the bound hold for every tau < r.
    const double constant = 2.0 / std::sqrt(1.0 - (tau / r) * (tau / r));
    auto with_constant = in;
    with_constant.emplace_back("constant", constant);
    const double improved = improved_bound(1, tau, r, n2, n3, constant);
    rows.push_back({"improved_bound", with_constant, improved, rep.e_adv_mean, rep.e_adv_ci95,
                    rep.e_adv_mean <= improved + rep.e_adv_ci95});
    const BoundValue thm2 = thm2_bound({1, tau, r, n2, n3, 1.0, 0.5});
    rows.push_back({"thm2_bound", in, thm2.value, rep.e_adv_mean, rep.e_adv_ci95,
                    rep.e_adv_mean <= thm2.value + rep.e_adv_ci95});
  }
  {  // two-segment abstention
    ToyGeometry g{1.0, 50.0, 20, 0.5};
    const std::vector<double> taus{0.05, 0.2, 0.6};
    const auto mc = toy_abstention_mc(g, taus, scaled(2e4), derive_seed(seed, 12));
    for (std::size_t j = 0; j < taus.size(); ++j) {
      const double v = toy_abstention(taus[j], g.segment_length, g.per_class);
      rows.push_back({"toy_abstention", {{"tau", taus[j]}, {"D", 1.0}, {"m", 20}}, v, mc[j].value, mc[j].ci95,
                      std::abs(mc[j].value - v) <= std::max(0.01, 2.0 * mc[j].ci95)});
    }
  }
  {  // two-segment robust accuracy under both conventions
    ToyGeometry g{1.0, 50.0, 200, 0.5};
    for (auto conv : {RayConvention::directed_ray, RayConvention::full_line}) {
      const double v = toy_robust_accuracy(0.5, 1.0, 50.0, 200, conv);
      const McEstimate mc = toy_robust_accuracy_mc(g, 0.5, conv, scaled(2e4), derive_seed(seed, 13));
      rows.push_back({conv == RayConvention::directed_ray ? "toy_robust_accuracy_directed_ray"
                                                           : "toy_robust_accuracy_full_line",
                      {{"tau", 0.5}, {"D", 1.0}, {"r", 50.0}, {"m", 200}}, v, mc.value, mc.ci95,
                      std::abs(mc.value - v) <= std::max(0.005, 2.0 * mc.ci95)});
    }
  }
  {  // toy optimal threshold: ratio to the predicted order of growth
    const ToyOptimum opt = toy_optimal_tau(1.0, 100.0, 100, 0.5);
    rows.push_back({"toy_optimal_tau", {{"D", 1.0}, {"r", 100.0}, {"m", 100}, {"c", 0.5}}, opt.tau, opt.ratio,
                    0.0, opt.ratio >= 1.0 / 3.0 && opt.ratio <= 3.0});
  }
  {  // coverage: abstention on fresh samples at the suggested sample size
    CoverageFixture fx;
    const double beta = 0.5;
    const std::size_t m = coverage_sample_bound(fx.n2, fx.balls, beta);
    const double rate = coverage_abstention_mc(fx, m, scaled(5000), derive_seed(seed, 14));
    rows.push_back({"coverage_sample_bound",
                    {{"n2", fx.n2}, {"N", static_cast<double>(fx.balls)}, {"beta", beta}, {"delta", fx.delta}},
                    static_cast<double>(m), rate, 0.0, rate <= fx.delta + 0.02});
  }
  {  // Lipschitz and discontinuity bounds on a uniform-cube fixture
    const int n2 = 2, n3 = 1;
    const std::size_t m = 50, test_size = 50;
    Rng rng = make_rng(seed, 15);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](std::size_t count, double shift) {
      FeatureMatrix f(static_cast<Eigen::Index>(count), n2);
      std::vector<int> labels(count);
      for (std::size_t i = 0; i < count; ++i) {
        labels[i] = unit(rng) < 0.5 ? 0 : 1;
        f(static_cast<Eigen::Index>(i), 0) = unit(rng) + (labels[i] ? shift : 0.0);
        f(static_cast<Eigen::Index>(i), 1) = unit(rng);
      }
      return LabeledDataset(std::move(f), std::move(labels));
    };
    const LabeledDataset train = draw(m, 3.0);
    const LabeledDataset test = draw(test_size, 3.0);
    const auto subspaces = sample_subspaces(n2, n3, 4, derive_seed(seed, 16));
    const TauCurves curves = curves_vs_tau(train, 0.0, test, subspaces, 0.5, {0.0, 1.0});
    const double r = min_interclass_distance(train);
    std::vector<double> grid;
    for (int j = 0; j <= 100; ++j) grid.push_back(0.01 * j);
    const double slope = max_finite_difference_slope(curves.e_adv, grid);
    const double lip = lipschitz_bound_eadv(m, r, n2, n3);
    rows.push_back({"lipschitz_bound_eadv", {{"m", m}, {"r", r}, {"n2", n2}, {"n3", n3}}, lip, slope, 0.0,
                    slope <= 10.0 * lip});
    const double w = 0.05;
    // Nearest-neighbor distances of uniform points have density at most
    // about 2 pi m t on the unit square.
    const double kappa = 2.0 * kPi;
    const auto counts = breakpoint_window_counts(curves.d_nat, w, 100, derive_seed(seed, 17));
    const double worst = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
    const double bound = discontinuity_rate_bound(kappa, m, n2, test_size, w);
    rows.push_back({"discontinuity_rate_bound",
                    {{"kappa", kappa}, {"m", m}, {"n2", n2}, {"test_size", test_size}, {"w", w}}, bound, worst,
                    0.0, worst <= 20.0 * bound});
  }
  return rows;
}

}  // namespace robustnn
