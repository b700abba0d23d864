// Command-line driver for the robustnn library.

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reports.hpp"
#include "robustnn/version.hpp"

using namespace robustnn;
using robustnn::cli::Json;

namespace {

// Errors in the values of otherwise well-formed flags.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    cli::write_text(out_path, text);
  }
}

void emit_json(const std::string& out_path, const Json& j) { emit(out_path, j.dump(2) + "\n"); }

struct GenArgs {
  bool toy = false;
  double D = 1.0, r = 10.0, c = 0.5;
  std::size_t m = 10;
  std::size_t classes = 2, per_class = 50;
  int dim = 2;
  double stddev = 0.5, separation = 4.0;
  std::uint64_t seed = 0;
  std::string out;
};

void run_gen(const GenArgs& a) {
  LabeledDataset ds = [&] {
    if (a.toy) return gen_toy_segments(ToyGeometry{a.D, a.r, a.m, a.c}, a.seed);
    if (a.dim < 1 || a.classes < 1) throw UsageError("--dim and --classes must be >= 1");
    FeatureMatrix centers = FeatureMatrix::Zero(static_cast<Eigen::Index>(a.classes), a.dim);
    for (std::size_t k = 0; k < a.classes; ++k) centers(static_cast<Eigen::Index>(k), 0) = a.separation * static_cast<double>(k);
    return gen_gaussian_clusters(centers, std::vector<std::size_t>(a.classes, a.per_class), a.stddev, a.seed);
  }();
  emit(a.out, format_dataset(ds));
}

struct ModelArgs {
  std::string train;
  double tau = 1.0;
  double sigma = 0.0;
};

void add_model_flags(CLI::App* sub, ModelArgs& m, bool need_tau = true) {
  sub->add_option("--train", m.train, "training set CSV")->required();
  if (need_tau) sub->add_option("--tau", m.tau, "abstention threshold")->check(CLI::NonNegativeNumber);
  sub->add_option("--sigma", m.sigma, "separation radius")->check(CLI::NonNegativeNumber);
}

Json model_config(const ModelArgs& m) {
  return Json{{"train", m.train}, {"tau", m.tau}, {"sigma", m.sigma}};
}

struct PreprocessArgs {
  std::string data;
  double sigma = 0.0;
  std::string out, report;
};

void run_preprocess(const PreprocessArgs& a) {
  const LabeledDataset ds = load_dataset(a.data);
  const SeparationResult sep = preprocess_separation(ds, a.sigma);
  emit(a.out, format_dataset(sep.kept));
  if (!a.report.empty()) {
    emit_json(a.report, cli::envelope("preprocess", Json{{"data", a.data}, {"sigma", a.sigma}},
                                      Json{{"kept", sep.kept_indices.size()},
                                           {"removed_indices", sep.removed_indices}}));
  }
}

struct PredictArgs {
  ModelArgs model;
  std::string test, out;
};

void run_predict(const PredictArgs& a) {
  const RobustModel model = RobustModel::build(load_dataset(a.model.train), {a.model.tau, a.model.sigma});
  const LabeledDataset test = load_dataset(a.test);
  if (test.dim() != model.train().dim()) throw UsageError("test and training dimensions differ");
  std::ostringstream out;
  out << "index,label,prediction\n";
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Outcome o = model.predict(test.point(i));
    out << i << ',' << test.label(i) << ',' << (o.abstained() ? std::string("abstain") : std::to_string(o.label()))
        << '\n';
  }
  emit(a.out, out.str());
}

struct AttackArgs {
  ModelArgs model;
  std::string test, out, method = "exact";
  int n3 = 1;
  std::uint64_t seed = 0;
  bool directed = false;
};

void run_attack(const AttackArgs& a) {
  const RobustModel model = RobustModel::build(load_dataset(a.model.train), {a.model.tau, a.model.sigma});
  const LabeledDataset test = load_dataset(a.test);
  if (test.dim() != model.train().dim()) throw UsageError("test and training dimensions differ");
  AttackOptions options;
  options.directed_ray = a.directed;
  Json results = Json::array();
  std::size_t successes = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    Rng rng = make_rng(a.seed, i, 0);
    const Subspace s = sample_uniform_subspace(test.dim(), a.n3, rng);
    const AttackResult r = a.method == "exact" ? exact_attack(model, test.point(i), test.label(i), s, options)
                                               : approx_attack(model, test.point(i), test.label(i), s, options);
    Json entry{{"index", i}, {"label", test.label(i)}, {"success", r.succeeded()}};
    if (r.succeeded()) {
      ++successes;
      entry["target_index"] = model.kept_indices()[r.success->target_index];
      entry["distance_to_target"] = r.success->distance_to_target;
      entry["adv_point"] = cli::to_json(r.success->adv_point);
    }
    results.push_back(std::move(entry));
  }
  Json config = model_config(a.model);
  config["test"] = a.test;
  config["method"] = a.method;
  config["n3"] = a.n3;
  config["seed"] = a.seed;
  config["directed_ray"] = a.directed;
  emit_json(a.out, cli::envelope("attack", config,
                                 Json{{"successes", successes}, {"results", std::move(results)}}));
}

struct EvalArgs {
  ModelArgs model;
  std::string test, out, adversary = "uniform", ci = "normal";
  int n3 = 1;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double kappa_p = 0.5, kappa_q = 0.1;
};

void run_eval(const EvalArgs& a) {
  const RobustModel model = RobustModel::build(load_dataset(a.model.train), {a.model.tau, a.model.sigma});
  const LabeledDataset test = load_dataset(a.test);
  if (test.dim() != model.train().dim()) throw UsageError("test and training dimensions differ");
  RobustErrorOptions options;
  options.n3 = a.n3;
  options.trials = a.trials;
  options.seed = a.seed;
  options.ci = a.ci == "clopper-pearson" ? CiMethod::clopper_pearson : CiMethod::normal;
  if (a.adversary == "kappa") {
    Vector axis = Vector::Zero(test.dim());
    axis(0) = 1.0;
    options.kappa = KappaBoundedSampler::with_cone_mass(test.dim(), a.n3, a.kappa_p, axis, a.kappa_q);
  }
  const MetricsReport r = robust_error_mc(model, test, options);
  Json config = model_config(a.model);
  config["test"] = a.test;
  config["n3"] = a.n3;
  config["trials"] = a.trials;
  config["seed"] = a.seed;
  config["adversary"] = a.adversary;
  config["ci"] = a.ci;
  Json payload{{"report", cli::to_json(r)}};
  if (options.kappa) {
    config["kappa_p"] = a.kappa_p;
    config["kappa_q"] = a.kappa_q;
    payload["kappa"] = options.kappa->kappa();
  }
  emit_json(a.out, cli::envelope("eval", config, std::move(payload)));
}

struct CurveArgs {
  ModelArgs model;
  std::string test, out;
  int n3 = 1;
  std::size_t subspaces = 10;
  double c = 0.5;
  std::optional<double> tau_max;
  std::uint64_t seed = 0;
};

void run_curve(const CurveArgs& a) {
  const RobustModel model = RobustModel::build(load_dataset(a.model.train), {0.0, a.model.sigma});
  const LabeledDataset test = load_dataset(a.test);
  if (test.dim() != model.train().dim()) throw UsageError("test and training dimensions differ");
  const auto subspaces = sample_subspaces(test.dim(), a.n3, a.subspaces, a.seed);
  const TauCurves curves = curves_vs_tau(model, test, subspaces, a.c, {0.0, a.tau_max});
  emit(a.out, cli::curves_csv(curves));
}

struct TuneArgs {
  ModelArgs model;
  std::string test, out, csv, mode = "online";
  std::size_t rounds = 50, batch = 20, subspaces_per_batch = 1;
  std::optional<double> lambda, tau_lo, tau_hi;
  double c = 0.5;
  int n3 = 1;
  std::uint64_t seed = 0;
  std::vector<double> tau_grid, sigma_grid;
};

void run_tune(const TuneArgs& a) {
  const LabeledDataset train = load_dataset(a.model.train);
  const LabeledDataset pool = load_dataset(a.test);
  if (pool.dim() != train.dim()) throw UsageError("test and training dimensions differ");
  Json config{{"train", a.model.train}, {"test", a.test}, {"mode", a.mode}, {"sigma", a.model.sigma},
              {"c", a.c}, {"n3", a.n3}, {"seed", a.seed}};

  if (a.mode == "grid") {
    if (a.tau_grid.empty()) throw UsageError("grid mode needs --tau-grid");
    const std::vector<double> sigmas = a.sigma_grid.empty() ? std::vector<double>{a.model.sigma} : a.sigma_grid;
    const auto subspaces = sample_subspaces(train.dim(), a.n3, a.subspaces_per_batch, a.seed);
    const GridTuneResult r = tune_tau_sigma_grid(train, pool, subspaces, a.c, a.tau_grid, sigmas);
    config["tau_grid"] = a.tau_grid;
    config["sigma_grid"] = sigmas;
    config["subspaces"] = a.subspaces_per_batch;
    Json cells = Json::array();
    for (const auto& cell : r.cells) {
      cells.push_back(Json{{"tau", cell.tau}, {"sigma", cell.sigma}, {"valid", cell.valid},
                           {"g", cell.valid ? Json(cell.g) : Json(nullptr)}});
    }
    emit_json(a.out, cli::envelope("tune", config,
                                   Json{{"tau", r.tau}, {"sigma", r.sigma}, {"g", r.g}, {"cells", std::move(cells)}}));
    return;
  }

  if (a.rounds == 0 || a.batch == 0) throw UsageError("--rounds and --batch must be >= 1");
  // Batches are drawn with replacement from the test pool.
  Rng rng = make_rng(a.seed, 3);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<LabeledDataset> batches;
  for (std::size_t t = 0; t < a.rounds; ++t) {
    std::vector<std::size_t> idx(a.batch);
    for (auto& i : idx) i = pick(rng);
    batches.push_back(pool.subset(idx));
  }
  OnlineConfig oc;
  oc.sigma = a.model.sigma;
  oc.n3 = a.n3;
  oc.subspaces_per_batch = a.subspaces_per_batch;
  oc.lambda = a.lambda;
  oc.c = a.c;
  oc.seed = a.seed;
  if (a.tau_lo || a.tau_hi) {
    const auto def = default_tau_domain(RobustModel::build(train, {0.0, a.model.sigma}).train());
    oc.domain = std::make_pair(a.tau_lo.value_or(def.first), a.tau_hi.value_or(def.second));
  }
  const OnlineResult r = run_online(train, batches, oc);
  const BatchThreshold b = online_to_batch(r.tau_history, r.objectives);
  config["rounds"] = a.rounds;
  config["batch"] = a.batch;
  config["subspaces_per_batch"] = a.subspaces_per_batch;
  config["lambda"] = r.lambda;
  config["tau_domain"] = {r.lo, r.hi};
  emit_json(a.out, cli::envelope("tune", config,
                                 Json{{"tau_history", r.tau_history},
                                      {"regret_curve", r.regret_curve},
                                      {"tau_hat", cli::to_json(b)},
                                      {"expected_g", b.expected_g}}));
  if (!a.csv.empty()) cli::write_text(a.csv, cli::pieces_csv(r.cumulative_utility));
}

struct BoundsArgs {
  std::uint64_t seed = 0;
  double effort = 1.0;
  std::string out;
};

void run_bounds(const BoundsArgs& a) {
  Json rows = Json::array();
  for (const auto& row : verify_bounds(a.seed, a.effort)) rows.push_back(cli::to_json(row));
  emit_json(a.out, cli::envelope("bounds", Json{{"seed", a.seed}, {"effort", a.effort}},
                                 Json{{"rows", std::move(rows)}}));
}

struct ToyArgs {
  double D = 1.0, r = 50.0, c = 0.5, tau = 0.5;
  std::size_t m = 200, trials = 20000;
  std::uint64_t seed = 0;
  std::string out;
};

void run_toy(const ToyArgs& a) {
  const ToyGeometry g{a.D, a.r, a.m, a.c};
  g.validate();
  if (a.tau > a.D) throw UsageError("--tau must not exceed --D");
  const auto abst = toy_abstention_mc(g, {a.tau}, a.trials, a.seed).front();
  const auto directed = toy_robust_accuracy_mc(g, a.tau, RayConvention::directed_ray, a.trials, a.seed);
  const auto full = toy_robust_accuracy_mc(g, a.tau, RayConvention::full_line, a.trials, a.seed);
  Json optimum;
  try {
    const ToyOptimum opt = toy_optimal_tau(a.D, a.r, a.m, a.c);
    optimum = Json{{"tau", opt.tau}, {"scale", opt.scale}, {"ratio", opt.ratio}};
  } catch (const std::runtime_error& e) {
    optimum = Json{{"error", e.what()}};
  }
  auto mc = [](const McEstimate& e) { return Json{{"value", e.value}, {"ci95", e.ci95}, {"trials", e.trials}}; };
  emit_json(a.out,
            cli::envelope("toy",
                          Json{{"D", a.D}, {"r", a.r}, {"m", a.m}, {"c", a.c}, {"tau", a.tau},
                               {"trials", a.trials}, {"seed", a.seed}},
                          Json{{"abstention", Json{{"formula", toy_abstention(a.tau, a.D, a.m)}, {"mc", mc(abst)}}},
                               {"robust_accuracy_directed_ray",
                                Json{{"formula", toy_robust_accuracy(a.tau, a.D, a.r, a.m, RayConvention::directed_ray)},
                                     {"mc", mc(directed)}}},
                               {"robust_accuracy_full_line",
                                Json{{"formula", toy_robust_accuracy(a.tau, a.D, a.r, a.m, RayConvention::full_line)},
                                     {"mc", mc(full)}}},
                               {"optimal_tau", optimum}}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Abstaining nearest-neighbor classifier under random-subspace attacks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  unsigned threads = 1;
  app.add_option("--threads", threads, "worker threads for Monte Carlo loops (0 = all cores)");
  std::function<void()> action;

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic dataset");
  g->add_flag("--toy", gen.toy, "two-segment example instead of Gaussian clusters");
  g->add_option("--D", gen.D, "segment length")->check(CLI::PositiveNumber);
  g->add_option("--r", gen.r, "gap between the segments")->check(CLI::PositiveNumber);
  g->add_option("--m", gen.m, "points per segment")->check(CLI::PositiveNumber);
  g->add_option("--classes", gen.classes, "number of clusters");
  g->add_option("--per-class", gen.per_class, "points per cluster");
  g->add_option("--dim", gen.dim, "feature dimension");
  g->add_option("--stddev", gen.stddev, "cluster standard deviation")->check(CLI::NonNegativeNumber);
  g->add_option("--separation", gen.separation, "distance between cluster centers");
  g->add_option("--seed", gen.seed)->required();
  g->add_option("--out", gen.out, "output CSV (default stdout)");
  g->callback([&] { action = [&] { run_gen(gen); }; });

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "remove points with a close differently-labelled neighbor");
  p->add_option("--data", pre.data)->required();
  p->add_option("--sigma", pre.sigma)->check(CLI::NonNegativeNumber)->required();
  p->add_option("--out", pre.out, "kept points CSV (default stdout)");
  p->add_option("--report", pre.report, "JSON with the removed indices");
  p->callback([&] { action = [&] { run_preprocess(pre); }; });

  PredictArgs pred;
  auto* pr = app.add_subcommand("predict", "classify a CSV of points");
  add_model_flags(pr, pred.model);
  pr->add_option("--test", pred.test)->required();
  pr->add_option("--out", pred.out);
  pr->callback([&] { action = [&] { run_predict(pred); }; });

  AttackArgs att;
  auto* at = app.add_subcommand("attack", "attack every test point with one random subspace");
  add_model_flags(at, att.model);
  at->add_option("--test", att.test)->required();
  at->add_option("--n3", att.n3)->check(CLI::PositiveNumber);
  at->add_option("--method", att.method)->check(CLI::IsMember({"exact", "approx"}));
  at->add_flag("--directed-ray", att.directed, "perturb along a ray only (n3 = 1)");
  at->add_option("--seed", att.seed)->required();
  at->add_option("--out", att.out);
  at->callback([&] { action = [&] { run_attack(att); }; });

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "natural error, abstention and Monte Carlo robust error");
  add_model_flags(e, ev.model);
  e->add_option("--test", ev.test)->required();
  e->add_option("--n3", ev.n3)->check(CLI::PositiveNumber);
  e->add_option("--trials", ev.trials)->check(CLI::PositiveNumber);
  e->add_option("--adversary", ev.adversary)->check(CLI::IsMember({"uniform", "kappa"}));
  e->add_option("--kappa-p", ev.kappa_p, "cone mixture weight");
  e->add_option("--kappa-q", ev.kappa_q, "uniform mass of the cone");
  e->add_option("--ci", ev.ci)->check(CLI::IsMember({"normal", "clopper-pearson"}));
  e->add_option("--seed", ev.seed)->required();
  e->add_option("--out", ev.out);
  e->callback([&] { action = [&] { run_eval(ev); }; });

  CurveArgs cu;
  auto* c = app.add_subcommand("curve", "exact E_adv, D_nat and g as functions of tau (CSV)");
  add_model_flags(c, cu.model, false);
  c->add_option("--test", cu.test)->required();
  c->add_option("--n3", cu.n3)->check(CLI::PositiveNumber);
  c->add_option("--subspaces", cu.subspaces);
  c->add_option("--c", cu.c)->check(CLI::NonNegativeNumber);
  c->add_option("--tau-max", cu.tau_max)->check(CLI::PositiveNumber);
  c->add_option("--seed", cu.seed)->required();
  c->add_option("--out", cu.out);
  c->callback([&] { action = [&] { run_curve(cu); }; });

  TuneArgs tu;
  auto* t = app.add_subcommand("tune", "choose tau online (exponential forecaster) or on a (tau, sigma) grid");
  add_model_flags(t, tu.model, false);
  t->add_option("--test", tu.test, "pool the batches are drawn from")->required();
  t->add_option("--mode", tu.mode)->check(CLI::IsMember({"online", "grid"}));
  t->add_option("--rounds", tu.rounds);
  t->add_option("--batch", tu.batch);
  t->add_option("--lambda", tu.lambda)->check(CLI::PositiveNumber);
  t->add_option("--c", tu.c)->check(CLI::NonNegativeNumber);
  t->add_option("--n3", tu.n3)->check(CLI::PositiveNumber);
  t->add_option("--subspaces-per-batch", tu.subspaces_per_batch);
  t->add_option("--tau-lo", tu.tau_lo);
  t->add_option("--tau-hi", tu.tau_hi);
  t->add_option("--tau-grid", tu.tau_grid)->delimiter(',');
  t->add_option("--sigma-grid", tu.sigma_grid)->delimiter(',');
  t->add_option("--seed", tu.seed)->required();
  t->add_option("--out", tu.out, "JSON report (default stdout)");
  t->add_option("--csv", tu.csv, "final cumulative utility as CSV");
  t->callback([&] { action = [&] { run_tune(tu); }; });

  BoundsArgs bo;
  auto* b = app.add_subcommand("bounds", "evaluate every bound against a Monte Carlo estimate");
  b->add_option("--seed", bo.seed)->required();
  b->add_option("--effort", bo.effort, "scales the Monte Carlo trial counts")->check(CLI::PositiveNumber);
  b->add_option("--out", bo.out);
  b->callback([&] { action = [&] { run_bounds(bo); }; });

  ToyArgs to;
  auto* y = app.add_subcommand("toy", "two-segment example: closed forms against simulation");
  y->add_option("--D", to.D)->check(CLI::PositiveNumber);
  y->add_option("--r", to.r)->check(CLI::PositiveNumber);
  y->add_option("--m", to.m)->check(CLI::PositiveNumber);
  y->add_option("--c", to.c)->check(CLI::PositiveNumber);
  y->add_option("--tau", to.tau)->check(CLI::NonNegativeNumber);
  y->add_option("--trials", to.trials)->check(CLI::PositiveNumber);
  y->add_option("--seed", to.seed)->required();
  y->add_option("--out", to.out);
  y->callback([&] { action = [&] { run_toy(to); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    set_worker_threads(threads);
    action();
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
