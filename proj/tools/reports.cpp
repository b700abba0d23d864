#include "reports.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "robustnn/version.hpp"

namespace robustnn::cli {

namespace {

// JSON has no infinity; unreachable thresholds are reported as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Json to_json(const MetricsReport& r) {
  return Json{{"e_nat", r.e_nat},
              {"d_nat", r.d_nat},
              {"e_adv_mean", r.e_adv_mean},
              {"e_adv_ci95", r.e_adv_ci95},
              {"e_adv_lower", r.e_adv_lower},
              {"e_adv_upper", r.e_adv_upper},
              {"successes", r.successes},
              {"evaluations", r.evaluations},
              {"subspace_trials", r.subspace_trials},
              {"test_size", r.test_size},
              {"nonconverged", r.nonconverged},
              {"n3", r.n3},
              {"adversary", r.adversary},
              {"seeds", Json{{"base", r.seed}, {"scheme", "subspace for (point i, trial t) from derive_seed(base, i, t)"}}}};
}

Json to_json(const BoundCheck& row) {
  Json inputs = Json::object();
  for (const auto& [name, value] : row.inputs) inputs[name] = number(value);
  return Json{{"bound_name", row.bound_name},
              {"inputs", inputs},
              {"value", number(row.value)},
              {"empirical", number(row.empirical)},
              {"ci", number(row.ci)},
              {"pass", row.pass}};
}

Json to_json(const PiecewiseConstantFn& f) {
  return Json{{"lo", f.lo()}, {"hi", f.hi()}, {"breakpoints", f.breakpoints()}, {"values", f.values()}};
}

Json to_json(const BatchThreshold& b) {
  return Json{{"support", b.support},
              {"expected_g", b.expected_g},
              {"min_g", b.min_g},
              {"best_tau", b.best_tau},
              {"gap", b.gap}};
}

std::string curves_csv(const TauCurves& curves) {
  std::vector<double> bps;
  for (const auto* f : {&curves.e_adv, &curves.d_nat}) {
    bps.insert(bps.end(), f->breakpoints().begin(), f->breakpoints().end());
  }
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
  std::ostringstream out;
  out << "tau,e_adv,d_nat,g\n";
  auto row = [&](double tau, double probe) {
    out << fmt(tau) << ',' << fmt(curves.e_adv(probe)) << ',' << fmt(curves.d_nat(probe)) << ','
        << fmt(curves.g(probe)) << '\n';
  };
  row(curves.g.lo(), curves.g.lo());
  for (std::size_t j = 0; j < bps.size(); ++j) {
    // The piece after a breakpoint ends at the next breakpoint (inclusive).
    row(bps[j], j + 1 < bps.size() ? bps[j + 1] : curves.g.hi());
  }
  return out.str();
}

std::string pieces_csv(const PiecewiseConstantFn& f) {
  std::ostringstream out;
  out << "tau_left,tau_right,value\n";
  for (const auto& p : f.pieces()) out << fmt(p.left) << ',' << fmt(p.right) << ',' << fmt(p.value) << '\n';
  return out.str();
}

Json envelope(const std::string& command, const Json& config, Json payload) {
  Json out{{"version", kVersion}, {"command", command}, {"config", config}};
  for (auto& [key, value] : payload.items()) out[key] = std::move(value);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace robustnn::cli
