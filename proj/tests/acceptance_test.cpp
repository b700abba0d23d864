// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any of them fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "robustnn/bounds.hpp"
#include "robustnn/tuner.hpp"

using namespace robustnn;

namespace {

struct Outcome_ {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

LabeledDataset two_clusters(int n2, double distance, double stddev, std::size_t per_class,
                            std::uint64_t seed) {
  FeatureMatrix centers = FeatureMatrix::Zero(2, n2);
  centers(1, 0) = distance;
  return gen_gaussian_clusters(centers, {per_class, per_class}, stddev, seed);
}

// Random attack instance for the oracle comparison.
struct Instance {
  LabeledDataset train;
  Vector x;
  int y = 0;
  Subspace s;
  double tau = 1.0;
};

Instance make_instance(std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> dim(2, 4), count(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  const int n2 = dim(rng);
  const int n3 = n2 == 2 ? 1 : 1 + static_cast<int>(unit(rng) < 0.5);
  FeatureMatrix centers(2, n2);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers(i) = 1.5 * normal(rng);
  const std::size_t a = static_cast<std::size_t>(count(rng)), b = static_cast<std::size_t>(count(rng));
  LabeledDataset train = gen_gaussian_clusters(centers, {a, b}, 1.0, rng());
  Vector x(n2);
  for (int d = 0; d < n2; ++d) x(d) = 1.5 * normal(rng);
  const int y = unit(rng) < 0.5 ? 0 : 1;
  Subspace s = sample_uniform_subspace(n2, n3, rng);
  const double tau = 0.2 + 2.0 * unit(rng);
  return {std::move(train), std::move(x), y, std::move(s), tau};
}

std::vector<Instance> instances() {
  std::vector<Instance> out;
  for (std::uint64_t k = 0; k < 200; ++k) out.push_back(make_instance(derive_seed(1001, 0, k)));
  return out;
}

Outcome_ criterion1(const std::vector<Instance>& cases) {
  int agree = 0, boundary = 0, successes = 0, two_dim = 0;
  std::string first_bad;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const Instance& in = cases[k];
    const bool exact = exact_attack(in.train, in.x, in.y, in.s, in.tau).succeeded();
    const bool oracle = brute_force_attack_oracle(in.train, in.x, in.y, in.s, in.tau).success;
    successes += exact;
    two_dim += in.s.dim() == 2;
    if (exact == oracle) {
      ++agree;
      continue;
    }
    const double crit = critical_threshold(in.train, in.x, in.y, in.s);
    if (std::abs(crit - in.tau) <= 1e-6) {
      ++agree;
      ++boundary;
    } else if (first_bad.empty()) {
      first_bad = fmt(" first mismatch: instance %zu exact=%d oracle=%d crit=%.9g tau=%.9g", k, exact,
                      oracle, crit, in.tau);
    }
  }
  return {agree == static_cast<int>(cases.size()),
          fmt("%d/%zu agree (%d at the tolerance boundary), %d successes, %d with n3=2", agree,
              cases.size(), boundary, successes, two_dim) +
              first_bad};
}

Outcome_ criterion2() {
  const LabeledDataset train = two_clusters(5, 10.0, 0.1, 50, 21);
  const LabeledDataset test = two_clusters(5, 10.0, 0.1, 10, 22);
  const LinearModel model = train_linear_baseline(train);
  std::size_t train_correct = 0;
  for (std::size_t i = 0; i < train.size(); ++i) train_correct += model.predict(train.point(i)) == train.label(i);
  RobustErrorOptions opts;
  opts.n3 = 1;
  opts.trials = 1000;
  opts.seed = 23;
  const MetricsReport r = robust_error_mc(model, test, opts);
  return {r.successes == r.evaluations && train_correct == train.size(),
          fmt("%zu/%zu subspace attacks succeed (training accuracy %zu/%zu)", r.successes, r.evaluations,
              train_correct, train.size())};
}

Outcome_ criterion3() {
  const int n2 = 10;
  const LabeledDataset train = two_clusters(n2, 10.0, 0.5, 50, 31);
  const LabeledDataset test = two_clusters(n2, 10.0, 0.5, 5, 32);
  const LinearModel linear = train_linear_baseline(train);
  const Predictor lin = [&](const Vector& v) { return Outcome::label(linear.predict(v)); };
  const double inf = std::numeric_limits<double>::infinity();
  const Predictor nn = [&](const Vector& v) { return predict_thresholded(train, v, inf); };
  std::string detail;
  bool pass = true;
  for (const auto& [name, clf] : {std::pair<const char*, const Predictor*>{"linear", &lin}, {"1-NN", &nn}}) {
    double best = 0.0;
    std::string rates;
    for (int label : {0, 1}) {
      std::size_t hits = 0, total = 0;
      for (std::size_t i = 0; i < test.size(); ++i) {
        if (test.label(i) != label) continue;
        for (std::size_t d = 0; d < 1000; ++d) {
          Rng rng = make_rng(33, i, d);
          hits += line_attack(*clf, test.point(i), label, sample_unit_vector(n2, rng)).success;
          ++total;
        }
      }
      const double rate = static_cast<double>(hits) / static_cast<double>(total);
      best = std::max(best, rate);
      rates += fmt(" class%d=%.3f", label, rate);
    }
    pass = pass && best >= 0.45;
    detail += fmt("%s:%s; ", name, rates.c_str());
  }
  return {pass, detail};
}

Outcome_ criterion4() {
  struct Case {
    int n, k;
  };
  const std::vector<Case> cases{{5, 1}, {10, 1}, {10, 3}, {30, 5}};
  const std::vector<double> eps{0.05, 0.1, 0.3};
  const std::size_t samples = 1000000;
  // Twelve cells are compared at once: each cell also gets the
  // simultaneous (Bonferroni) 95% interval, and that decides the result.
  const double family_level = 1.0 - 0.05 / static_cast<double>(cases.size() * eps.size());
  bool pass = true;
  int cell_misses = 0;
  std::string detail;
  for (const auto& c : cases) {
    std::vector<std::size_t> hits(eps.size(), 0);
    Rng rng = make_rng(41, static_cast<std::uint64_t>(c.n), static_cast<std::uint64_t>(c.k));
    for (std::size_t t = 0; t < samples; ++t) {
      const Vector u = sample_unit_vector(c.n, rng);
      const double head = u.head(c.k).norm();
      for (std::size_t e = 0; e < eps.size(); ++e) hits[e] += head <= eps[e];
    }
    for (std::size_t e = 0; e < eps.size(); ++e) {
      const double exact = sphere_cap_fraction(c.n, c.k, eps[e]);
      const double upper = sphere_cap_fraction(c.n, c.k, eps[e], CapMode::upper_bound);
      const BinomialInterval cell = binomial_ci95(hits[e], samples, CiMethod::clopper_pearson);
      const BinomialInterval fam = binomial_ci(hits[e], samples, CiMethod::clopper_pearson, family_level);
      if (exact < cell.lower || exact > cell.upper) {
        ++cell_misses;
        detail += fmt(" outside per-cell interval (n=%d,k=%d,eps=%.2f): exact=%.6g ci=[%.6g,%.6g];", c.n, c.k,
                      eps[e], exact, cell.lower, cell.upper);
      }
      const bool ok = exact >= fam.lower && exact <= fam.upper && exact <= upper;
      if (!ok) {
        detail += fmt(" MISS (n=%d,k=%d,eps=%.2f): exact=%.6g simultaneous ci=[%.6g,%.6g] upper=%.6g;", c.n,
                      c.k, eps[e], exact, fam.lower, fam.upper, upper);
      }
      pass = pass && ok;
    }
  }
  return {pass, fmt("12 (n,k,eps) cells, 1e6 sphere points each; %d/12 outside the per-cell 95%% interval "
                    "(0.6 expected by chance);",
                    cell_misses) +
                    detail};
}

// Single opposite point at distance r: the test point abstains and any
// success comes from the line passing within tau of the training point.
struct OppositePoint {
  int n2;
  double ratio;
};

MetricsReport opposite_point_mc(const OppositePoint& f, std::optional<KappaBoundedSampler> kappa,
                                std::uint64_t seed) {
  FeatureMatrix tf = FeatureMatrix::Zero(1, f.n2);
  tf(0, 0) = 1.0;
  const LabeledDataset train(tf, {1});
  const LabeledDataset test(FeatureMatrix::Zero(1, f.n2), {0});
  RobustErrorOptions opts;
  opts.n3 = 1;
  opts.trials = 1000000;
  opts.seed = seed;
  opts.kappa = std::move(kappa);
  opts.ci = CiMethod::clopper_pearson;
  return robust_error_mc(RobustModel::build(train, {f.ratio, 0.0}), test, opts);
}

const std::vector<OppositePoint> kOpposite{{8, 0.02}, {8, 0.05}, {32, 0.02}, {32, 0.05}};

Outcome_ criterion5(std::vector<MetricsReport>& uniform) {
  bool pass = true;
  std::string detail;
  for (std::size_t k = 0; k < kOpposite.size(); ++k) {
    const auto& f = kOpposite[k];
    const MetricsReport r = opposite_point_mc(f, std::nullopt, derive_seed(51, k));
    uniform.push_back(r);
    const double bound = improved_bound(1, f.ratio, 1.0, f.n2, 1);
    const double exact = single_point_attack_probability(f.ratio, 1.0, f.n2, 1);
    const bool ok = r.e_adv_mean <= 1.05 * bound && exact >= r.e_adv_lower && exact <= r.e_adv_upper;
    pass = pass && ok;
    detail += fmt(" (n2=%d,tau/r=%.2f): %zu/%zu hits, bound=%.3g exact=%.3g;", f.n2, f.ratio, r.successes,
                  r.evaluations, bound, exact);
  }
  return {pass, detail};
}

Outcome_ criterion6(const std::vector<MetricsReport>& uniform) {
  bool pass = true;
  std::string detail;
  for (std::size_t k = 0; k < kOpposite.size(); ++k) {
    const auto& f = kOpposite[k];
    Vector axis = Vector::Zero(f.n2);
    axis(0) = 1.0;
    const auto sampler = KappaBoundedSampler::with_cone_mass(f.n2, 1, 0.5, axis, 0.1);
    const MetricsReport r = opposite_point_mc(f, sampler, derive_seed(61, k));
    // Slack: the upper end of the uniform interval.
    const bool ok = r.e_adv_mean <= sampler.kappa() * uniform[k].e_adv_upper;
    pass = pass && ok;
    detail += fmt(" (n2=%d,tau/r=%.2f): kappa=%.3f %zu hits vs uniform %zu;", f.n2, f.ratio, sampler.kappa(),
                  r.successes, uniform[k].successes);
  }
  return {pass, detail};
}

Outcome_ criterion7() {
  const ToyGeometry geom{1.0, 50.0, 200, 0.5};
  // Abstention decays on the scale D/m, so the grid covers [0, 5D/m].
  std::vector<double> taus;
  for (int k = 0; k < 20; ++k) taus.push_back(5.0 / 200.0 * k / 19.0);
  const auto abst = toy_abstention_mc(geom, taus, 100000, 71);
  double worst = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k)
    worst = std::max(worst, std::abs(abst[k].value - toy_abstention(taus[k], 1.0, 200)));
  bool pass = worst <= 0.01;
  std::string detail = fmt("abstention on [0, %.3f]: max |mc - formula| = %.4f;", taus.back(), worst);
  for (auto conv : {RayConvention::full_line, RayConvention::directed_ray}) {
    const McEstimate mc = toy_robust_accuracy_mc(geom, 0.5, conv, 100000, conv == RayConvention::full_line ? 72 : 73);
    const double formula = toy_robust_accuracy(0.5, 1.0, 50.0, 200, conv);
    pass = pass && std::abs(mc.value - formula) <= 0.005;
    detail += fmt(" %s accuracy mc=%.4f formula=%.4f;", conv == RayConvention::full_line ? "full-line" : "ray",
                  mc.value, formula);
  }
  return {pass, detail};
}

Outcome_ criterion8() {
  const double d = 1.0, r = 100.0, c = 0.5;
  bool pass = true;
  std::string detail;
  // Zero branch: pi c r / D at and below 1/m.
  for (std::size_t m : {10u, 100u, 1000u}) {
    const double edge = d / (std::numbers::pi * c * static_cast<double>(m));
    pass = pass && toy_optimal_tau(d, edge, m, c).tau == 0.0 && toy_optimal_tau(d, 0.5 * edge, m, c).tau == 0.0 &&
           toy_optimal_tau(d, 1.5 * edge, m, c).tau > 0.0;
  }
  const std::vector<std::pair<std::size_t, std::size_t>> runs{{10, 2000000}, {100, 500000}, {1000, 100000}};
  for (const auto& [m, trials] : runs) {
    const ToyOptimum opt = toy_optimal_tau(d, r, m, c);
    const bool ratio_ok = opt.tau > 0.0 && opt.ratio >= 1.0 / 3.0 && opt.ratio <= 3.0;
    // 21-point grid on [0, min(D/2, 4 * predicted scale)).
    const double top = std::min(0.5 * d, 4.0 * opt.scale);
    const double step = top / 21.0;
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(k * step);
    const auto g = toy_objective_mc(ToyGeometry{d, r, m, c}, grid, RayConvention::directed_ray, trials,
                                    derive_seed(81, m));
    std::size_t best = 0;
    for (std::size_t k = 1; k < g.size(); ++k)
      if (g[k].value < g[best].value) best = k;
    const bool grid_ok = std::abs(grid[best] - opt.tau) <= 2.0 * step + 1e-12;
    pass = pass && ratio_ok && grid_ok;
    detail += fmt(" m=%zu: tau*=%.5f ratio=%.3f grid argmin=%.5f (step %.5f);", m, opt.tau, opt.ratio, grid[best], step);
  }
  return {pass, detail};
}

Outcome_ criterion9() {
  const int n2 = 10;
  const double c = 0.5;
  auto stream = [&](std::uint64_t seed, std::size_t rounds) {
    std::vector<LabeledDataset> batches;
    for (std::size_t t = 0; t < rounds; ++t) batches.push_back(two_clusters(n2, 4.0, 1.0, 10, derive_seed(seed, 9, t)));
    return batches;
  };
  std::vector<double> at50, at200;
  bool exact_ok = true, identity_ok = true;
  double worst_exact = 0.0, worst_identity = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const LabeledDataset train = two_clusters(n2, 4.0, 1.0, 30, derive_seed(seed, 8));
    // One 200-round run; its regret curve is read at t = 50 and t = 200.
    {
      const std::size_t rounds = 200;
      OnlineConfig cfg;
      cfg.c = c;
      cfg.seed = derive_seed(seed, 7);
      cfg.subspaces_per_batch = 1;
      const OnlineResult r = run_online(train, stream(seed, rounds), cfg);
      at50.push_back(r.regret_curve[49] / 50.0);
      at200.push_back(r.regret_curve.back() / static_cast<double>(rounds));

      // Brute force over every breakpoint of every round and just past it.
      std::vector<double> cand{r.lo, r.hi};
      for (const auto& u : r.utilities)
        for (double b : u.breakpoints()) {
          cand.push_back(b);
          cand.push_back(std::nextafter(b, r.hi));
        }
      double best = -1.0;
      for (double tau : cand) {
        double sum = 0.0;
        for (const auto& u : r.utilities) sum += u(tau);
        best = std::max(best, sum);
      }
      double realized = 0.0;
      for (std::size_t t = 0; t < rounds; ++t) realized += r.utilities[t](r.tau_history[t]);
      const double err = std::abs((best - realized) - r.regret_curve.back());
      worst_exact = std::max(worst_exact, err);
      exact_ok = exact_ok && err <= 1e-12;

      const BatchThreshold b = online_to_batch(r.tau_history, r.objectives);
      const double gap_err = std::abs(b.gap - (1.0 + c) * r.regret_curve.back() / static_cast<double>(rounds));
      worst_identity = std::max(worst_identity, gap_err);
      identity_ok = identity_ok && gap_err <= 1e-12;
    }
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  const double m50 = median(at50), m200 = median(at200);
  return {m200 <= 0.7 * m50 && exact_ok && identity_ok,
          fmt("median regret/T: T=50 %.4f, T=200 %.4f (ratio %.3f); max brute-force diff %.2g; max gap "
              "identity diff %.2g",
              m50, m200, m50 > 0 ? m200 / m50 : 0.0, worst_exact, worst_identity)};
}

Outcome_ criterion10() {
  const CoverageFixture fx;
  const std::size_t m = coverage_sample_bound(fx.n2, fx.balls, 0.5);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    worst = std::max(worst, coverage_abstention_mc(fx, m, 5000, derive_seed(101, seed)));
  return {worst <= fx.delta + 0.02, fmt("m=%zu, worst abstention over 20 seeds %.4f (limit %.2f)", m, worst,
                                        fx.delta + 0.02)};
}

Outcome_ criterion11() {
  // Two clusters with 2% of the training labels flipped.
  LabeledDataset clean = two_clusters(2, 4.0, 1.0, 100, 111);
  std::vector<int> labels = clean.labels();
  Rng rng = make_rng(112);
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < labels.size() / 50; ++k) labels[order[k]] = 1 - labels[order[k]];
  const LabeledDataset train(clean.features(), labels);
  const LabeledDataset test = two_clusters(2, 4.0, 1.0, 50, 113);
  const auto subs = sample_subspaces(2, 1, 5, 114);
  const std::vector<double> taus{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.2, 1.5};
  const std::vector<double> sigmas{0.0, 0.25, 0.5, 0.75, 1.0};
  const GridTuneResult res = tune_tau_sigma_grid(train, test, subs, 0.5, taus, sigmas);
  // tau* is the best threshold without separation.
  double tau_star = 0.0, g0 = 1e9;
  for (const auto& cell : res.cells)
    if (cell.sigma == 0.0 && cell.g < g0) {
      g0 = cell.g;
      tau_star = cell.tau;
    }
  double best_sigma = 0.0, best_g = g0;
  for (const auto& cell : res.cells)
    if (cell.valid && cell.tau == tau_star && cell.g < best_g) {
      best_g = cell.g;
      best_sigma = cell.sigma;
    }
  return {best_g < g0, fmt("tau*=%.2f: g(tau*,0)=%.4f, best g(tau*,sigma)=%.4f at sigma=%.2f; grid optimum "
                           "g=%.4f at (tau=%.2f, sigma=%.2f)",
                           tau_star, g0, best_g, best_sigma, res.g, res.tau, res.sigma)};
}

Outcome_ criterion12(const std::vector<Instance>& cases) {
  int reports = 0, unsound = 0;
  for (const auto& in : cases) {
    const AttackResult approx = approx_attack(in.train, in.x, in.y, in.s, in.tau);
    if (!approx.succeeded()) continue;
    ++reports;
    const bool verified = predict_thresholded(in.train, approx.success->adv_point, in.tau).is_error_for(in.y);
    const bool exact = exact_attack(in.train, in.x, in.y, in.s, in.tau).succeeded();
    unsound += !(verified && exact);
  }
  return {unsound == 0, fmt("%d approximate successes, %d unsound", reports, unsound)};
}

}  // namespace

int main() {
  int failures = 0;
  auto run = [&](int id, const std::function<Outcome_()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome_ o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d: %s  %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  };
  const auto cases = instances();
  std::vector<MetricsReport> uniform;
  run(1, [&] { return criterion1(cases); });
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, [&] { return criterion5(uniform); });
  run(6, [&] {
    if (uniform.size() != kOpposite.size()) return Outcome_{false, "criterion 5 did not produce its baseline"};
    return criterion6(uniform);
  });
  run(7, criterion7);
  run(8, criterion8);
  run(9, criterion9);
  run(10, criterion10);
  run(11, criterion11);
  run(12, [&] { return criterion12(cases); });
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
