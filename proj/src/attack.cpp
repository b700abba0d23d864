#include "robustnn/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace robustnn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// The attack geometry expressed in subspace coordinates around x. For a
// training point x_j with centered coordinates P_j = B^T (x_j - x) and
// off-subspace residual r_j = ||(I - B B^T)(x_j - x)||^2, the squared
// distance from x + B c to x_j is ||c - P_j||^2 + r_j.
class SubspaceGeometry {
 public:
  SubspaceGeometry(const LabeledDataset& train, const Vector& x, int y_true,
                   const Subspace& s, const AttackOptions& options)
      : train_(train), x_(x), y_(y_true), s_(s), options_(options) {
    if (x.size() != train.dim() || s.ambient_dim() != train.dim()) {
      throw DimensionError("test point, training set and subspace dimensions disagree");
    }
    if (options.directed_ray && s.dim() != 1) {
      throw ConfigError("directed-ray attacks require a one-dimensional subspace");
    }
    const auto m = static_cast<Eigen::Index>(train.size());
    const Matrix centered = train.features().rowwise() - x.transpose();
    coords_ = centered * s.basis();
    const Matrix off = centered - coords_ * s.basis().transpose();
    residual_ = off.rowwise().squaredNorm();
    sqnorm_ = centered.rowwise().squaredNorm();
    scale_ = 1.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      scale_ = std::max(scale_, std::sqrt(sqnorm_(j)));
      if (train.label(static_cast<std::size_t>(j)) == y_true) same_.push_back(static_cast<std::size_t>(j));
    }
  }

  double scale() const { return scale_; }

  double distance(std::size_t j, const Vector& c) const {
    const auto row = static_cast<Eigen::Index>(j);
    return std::sqrt((c.transpose() - coords_.row(row)).squaredNorm() + residual_(row));
  }

  Vector closest_on_subspace(std::size_t i) const {
    Vector c = coords_.row(static_cast<Eigen::Index>(i)).transpose();
    if (options_.directed_ray) c(0) = std::max(c(0), 0.0);
    return c;
  }

  // Candidate perturbation coordinates for differently-labelled point i.
  // margin > 0 shrinks every same-label constraint by that distance.
  std::optional<Vector> candidate(std::size_t i, double margin) const {
    const Vector u = closest_on_subspace(i);
    if (margin == 0.0) {
      const double own = distance(i, u);
      const bool blocked = std::any_of(same_.begin(), same_.end(), [&](std::size_t w) {
        return distance(w, u) < own;
      });
      if (!blocked) return u;
    }
    const Eigen::Index n3 = s_.dim();
    const auto rows = static_cast<Eigen::Index>(same_.size() + (options_.directed_ray ? 1 : 0));
    Matrix a(rows, n3);
    Vector b(rows);
    const auto pi = coords_.row(static_cast<Eigen::Index>(i));
    for (std::size_t k = 0; k < same_.size(); ++k) {
      const auto w = static_cast<Eigen::Index>(same_[k]);
      const auto r = static_cast<Eigen::Index>(k);
      a.row(r) = 2.0 * (coords_.row(w) - pi);
      b(r) = sqnorm_(w) - sqnorm_(static_cast<Eigen::Index>(i)) - margin * a.row(r).norm();
    }
    if (options_.directed_ray) {
      a.row(rows - 1).setZero();
      a(rows - 1, 0) = -1.0;
      b(rows - 1) = 0.0;
    }
    try {
      return project_onto_polyhedron(coords_.row(static_cast<Eigen::Index>(i)).transpose(), a, b,
                                     options_.qp);
    } catch (const NonConverged& e) {
      throw AttackAborted(std::string("exact attack aborted: ") + e.what() +
                          " (candidate training index " + std::to_string(i) + ")");
    }
  }

  // Critical threshold on a line (or ray) in closed form. Along x + t b the
  // squared distance to x_j is t^2 - 2 p_j t + |x_j - x|^2, so the nearest
  // training point is given by the lower envelope of the lines
  // -2 p_j t + |x_j - x|^2. The answer is the smallest distance reached on a
  // piece of the envelope owned by a differently-labelled point; pieces are
  // closed, which counts ties as misclassified.
  double line_critical() const {
    struct Line {
      double slope, icpt;
      std::size_t j;
    };
    std::vector<Line> lines;
    lines.reserve(train_.size());
    for (std::size_t j = 0; j < train_.size(); ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      lines.push_back({-2.0 * coords_(r, 0), sqnorm_(r), j});
    }
    auto wrong = [&](const Line& l) { return train_.label(l.j) != y_; };
    std::sort(lines.begin(), lines.end(), [&](const Line& a, const Line& b) {
      if (a.slope != b.slope) return a.slope > b.slope;
      if (a.icpt != b.icpt) return a.icpt < b.icpt;
      return wrong(a) && !wrong(b);
    });
    auto cross = [](const Line& a, const Line& b) { return (b.icpt - a.icpt) / (a.slope - b.slope); };
    std::vector<Line> hull;
    for (const Line& l : lines) {
      if (!hull.empty() && hull.back().slope == l.slope) continue;
      while (hull.size() >= 2 && cross(hull[hull.size() - 2], l) < cross(hull[hull.size() - 2], hull.back()))
        hull.pop_back();
      hull.push_back(l);
    }
    const double start = options_.directed_ray ? 0.0 : -kInf;
    double best = kInf;
    for (std::size_t k = 0; k < hull.size(); ++k) {
      if (!wrong(hull[k])) continue;
      const double lo = std::max(start, k == 0 ? -kInf : cross(hull[k - 1], hull[k]));
      const double hi = k + 1 == hull.size() ? kInf : cross(hull[k], hull[k + 1]);
      if (hi < lo) continue;
      const auto r = static_cast<Eigen::Index>(hull[k].j);
      const double t = std::clamp(coords_(r, 0), lo, hi);
      const double d = t - coords_(r, 0);
      best = std::min(best, std::sqrt(d * d + residual_(r)));
    }
    return best;
  }

  Vector ambient(const Vector& c) const { return x_ + s_.basis() * c; }

  bool misclassified(const Vector& point, double tau) const {
    return predict_thresholded(train_, point, tau).is_error_for(y_);
  }

  std::vector<std::size_t> targets() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < train_.size(); ++j)
      if (train_.label(j) != y_) out.push_back(j);
    return out;
  }

 private:
  const LabeledDataset& train_;
  const Vector& x_;
  int y_;
  const Subspace& s_;
  const AttackOptions& options_;
  Matrix coords_;
  Vector residual_;
  Vector sqnorm_;
  double scale_ = 1.0;
  std::vector<std::size_t> same_;
};

AttackSuccess make_success(const LabeledDataset& train, Vector point, std::size_t target) {
  const double d = (point - train.point(target)).norm();
  return {std::move(point), target, d};
}

}  // namespace

AttackResult exact_attack(const LabeledDataset& train, const Vector& x, int y_true,
                          const Subspace& s, double tau, const AttackOptions& options) {
  const SubspaceGeometry geo(train, x, y_true, s, options);
  const double margins[] = {1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6};
  for (std::size_t i : geo.targets()) {
    // Nothing on x + S gets within tau of x_i.
    if (!(geo.distance(i, geo.closest_on_subspace(i)) < tau)) continue;
    const auto c = geo.candidate(i, 0.0);
    if (!c || !(geo.distance(i, *c) < tau)) continue;
    Vector point = geo.ambient(*c);
    if (geo.misclassified(point, tau)) return {make_success(train, std::move(point), i)};
    // Tie with a same-label point: step into the interior of the region.
    for (double factor : margins) {
      const auto inner = geo.candidate(i, factor * options.qp.tol * geo.scale());
      if (!inner || !(geo.distance(i, *inner) < tau)) continue;
      Vector p = geo.ambient(*inner);
      if (geo.misclassified(p, tau)) return {make_success(train, std::move(p), i)};
    }
  }
  return AttackResult::none();
}

AttackResult exact_attack(const RobustModel& model, const Vector& x, int y_true,
                          const Subspace& s, const AttackOptions& options) {
  return exact_attack(model.train(), x, y_true, s, model.tau(), options);
}

double critical_threshold(const LabeledDataset& train, const Vector& x, int y_true,
                          const Subspace& s, const AttackOptions& options) {
  const SubspaceGeometry geo(train, x, y_true, s, options);
  if (s.dim() == 1) return geo.line_critical();
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i : geo.targets()) {
    order.emplace_back(geo.distance(i, geo.closest_on_subspace(i)), i);
  }
  std::sort(order.begin(), order.end());
  double best = kInf;
  for (const auto& [lower, i] : order) {
    // The unconstrained distance bounds every candidate distance from below.
    if (lower >= best) break;
    const auto c = geo.candidate(i, 0.0);
    if (c) best = std::min(best, geo.distance(i, *c));
  }
  return best;
}

AttackResult approx_attack(const LabeledDataset& train, const Vector& x, int y_true,
                           const Subspace& s, double tau, const AttackOptions& options) {
  const SubspaceGeometry geo(train, x, y_true, s, options);
  for (std::size_t i = 0; i < train.size(); ++i) {
    Vector point = geo.ambient(geo.closest_on_subspace(i));
    const Neighbor nn = nearest_neighbor(train, point);
    if (train.label(nn.index) != y_true && nn.distance < tau) {
      if (!geo.misclassified(point, tau)) continue;
      return {make_success(train, std::move(point), nn.index)};
    }
  }
  return AttackResult::none();
}

AttackResult approx_attack(const RobustModel& model, const Vector& x, int y_true,
                           const Subspace& s, const AttackOptions& options) {
  return approx_attack(model.train(), x, y_true, s, model.tau(), options);
}

LineAttackResult line_attack(const Predictor& classifier, const Vector& x, int y_true,
                             const Vector& direction, const LineGrid& grid) {
  if (std::abs(direction.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("line attack direction must be a unit vector");
  }
  double magnitude = grid.start;
  for (int j = 0; j <= grid.steps; ++j, magnitude *= grid.ratio) {
    for (double sign : {1.0, -1.0}) {
      Vector point = x + sign * magnitude * direction;
      if (classifier(point).is_error_for(y_true)) {
        return {true, std::move(point), sign * magnitude};
      }
    }
  }
  return {};
}

bool attack_linear_exact(const LinearModel& model, const Vector& x, int y_true,
                         const Subspace& s) {
  if (model.predict(x) != y_true) return true;
  const auto it = std::find(model.classes.begin(), model.classes.end(), y_true);
  if (it == model.classes.end()) return true;  // the model can never output y_true
  const auto y_row = static_cast<Eigen::Index>(it - model.classes.begin());
  for (Eigen::Index k = 0; k < model.weights.rows(); ++k) {
    if (k == y_row) continue;
    const Vector diff = (model.weights.row(k) - model.weights.row(y_row)).transpose();
    const double full = diff.norm();
    if (full > 0.0 && s.coordinates(diff).norm() > 1e-12 * full) return true;
  }
  return false;
}

namespace {

// Probe evaluation for the brute-force oracle. Only ambient distances and
// predict_thresholded are used.
class OracleProbe {
 public:
  OracleProbe(const LabeledDataset& train, const Vector& x, int y, const Subspace& s,
              double tau)
      : train_(train), x_(x), y_(y), s_(s), tau_(tau) {}

  // Penalized distance to the closest wrongly-labelled training point that
  // is at least as close as every same-label point.
  double surrogate(const Vector& coords) const {
    const Vector p = x_ + s_.basis() * coords;
    double same = kInf;
    for (std::size_t j = 0; j < train_.size(); ++j)
      if (train_.label(j) == y_) same = std::min(same, (train_.point(j) - p).norm());
    double best = kInf;
    for (std::size_t j = 0; j < train_.size(); ++j) {
      if (train_.label(j) == y_) continue;
      const double d = (train_.point(j) - p).norm();
      const double excess = std::isinf(same) ? 0.0 : std::max(0.0, d - same);
      best = std::min(best, d + 1e6 * excess);
    }
    return best;
  }

  void probe(const Vector& coords) {
    const Vector p = x_ + s_.basis() * coords;
    const Neighbor nn = nearest_neighbor(train_, p);
    if (train_.label(nn.index) != y_) {
      result.best_threshold = std::min(result.best_threshold, nn.distance);
      if (!result.success && predict_thresholded(train_, p, tau_).is_error_for(y_)) {
        result.success = true;
        result.witness = p;
      }
    }
  }

  double evaluate(const Vector& coords) {
    probe(coords);
    return surrogate(coords);
  }

  OracleResult result{false, std::nullopt, kInf};

 private:
  const LabeledDataset& train_;
  const Vector& x_;
  int y_;
  const Subspace& s_;
  double tau_;
};

}  // namespace

OracleResult brute_force_attack_oracle(const LabeledDataset& train, const Vector& x,
                                       int y_true, const Subspace& s, double tau,
                                       const OracleOptions& options) {
  const int n3 = s.dim();
  if (n3 > 2 || train.size() > 32) {
    throw std::invalid_argument("brute-force oracle supports n3 <= 2 and at most 32 points");
  }
  if (options.directed_ray && n3 != 1) {
    throw ConfigError("directed-ray oracle requires a one-dimensional subspace");
  }
  double diameter = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    diameter = std::max(diameter, (train.point(i) - x).norm());
    for (std::size_t j = i + 1; j < train.size(); ++j)
      diameter = std::max(diameter, (train.point(i) - train.point(j)).norm());
  }
  const double half_width = 4.0 * std::max(diameter, 1e-12);
  OracleProbe probe(train, x, y_true, s, tau);

  if (n3 == 1) {
    const std::size_t g = options.grid_density ? options.grid_density : 2000;
    const double lo = options.directed_ray ? 0.0 : -half_width;
    const double step = (half_width - lo) / static_cast<double>(g - 1);
    std::vector<double> values(g);
    Vector c(1);
    for (std::size_t k = 0; k < g; ++k) {
      c(0) = lo + step * static_cast<double>(k);
      values[k] = probe.evaluate(c);
    }
    std::vector<std::size_t> minima;
    for (std::size_t k = 0; k < g; ++k) {
      const bool left = k == 0 || values[k] <= values[k - 1];
      const bool right = k + 1 == g || values[k] <= values[k + 1];
      if (left && right && std::isfinite(values[k])) minima.push_back(k);
    }
    std::sort(minima.begin(), minima.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    if (minima.size() > 32) minima.resize(32);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (std::size_t k : minima) {
      double a = std::max(lo, lo + step * (static_cast<double>(k) - 1.0));
      double b = std::min(half_width, lo + step * (static_cast<double>(k) + 1.0));
      Vector p1(1), p2(1);
      p1(0) = b - phi * (b - a);
      p2(0) = a + phi * (b - a);
      double f1 = probe.evaluate(p1), f2 = probe.evaluate(p2);
      for (int it = 0; it < 120 && b - a > 1e-15 * half_width; ++it) {
        if (f1 <= f2) {
          b = p2(0);
          p2 = p1;
          f2 = f1;
          p1(0) = b - phi * (b - a);
          f1 = probe.evaluate(p1);
        } else {
          a = p1(0);
          p1 = p2;
          f1 = f2;
          p2(0) = a + phi * (b - a);
          f2 = probe.evaluate(p2);
        }
      }
    }
    return probe.result;
  }

  const std::size_t g = options.grid_density ? options.grid_density : 600;
  const double step = 2.0 * half_width / static_cast<double>(g - 1);
  std::vector<double> values(g * g);
  Vector c(2);
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = 0; b < g; ++b) {
      c(0) = -half_width + step * static_cast<double>(a);
      c(1) = -half_width + step * static_cast<double>(b);
      values[a * g + b] = probe.evaluate(c);
    }
  }
  std::vector<std::size_t> minima;
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = 0; b < g; ++b) {
      const double v = values[a * g + b];
      if (!std::isfinite(v)) continue;
      bool is_min = true;
      for (int da = -1; da <= 1 && is_min; ++da) {
        for (int db = -1; db <= 1; ++db) {
          if (da == 0 && db == 0) continue;
          const auto na = static_cast<std::ptrdiff_t>(a) + da;
          const auto nb = static_cast<std::ptrdiff_t>(b) + db;
          if (na < 0 || nb < 0 || na >= static_cast<std::ptrdiff_t>(g) ||
              nb >= static_cast<std::ptrdiff_t>(g))
            continue;
          if (values[static_cast<std::size_t>(na) * g + static_cast<std::size_t>(nb)] < v) {
            is_min = false;
            break;
          }
        }
      }
      if (is_min) minima.push_back(a * g + b);
    }
  }
  std::sort(minima.begin(), minima.end(),
            [&](std::size_t p, std::size_t q) { return values[p] < values[q]; });
  if (minima.size() > 16) minima.resize(16);
  // Zooming grid search: robust to the kinks of the penalized surrogate.
  for (std::size_t idx : minima) {
    Vector center(2);
    center(0) = -half_width + step * static_cast<double>(idx / g);
    center(1) = -half_width + step * static_cast<double>(idx % g);
    double best = values[idx];
    double h = step / 5.0;
    while (h > 1e-14 * half_width) {
      Vector next = center;
      for (int da = -10; da <= 10; ++da) {
        for (int db = -10; db <= 10; ++db) {
          Vector p(2);
          p(0) = center(0) + h * da;
          p(1) = center(1) + h * db;
          const double v = probe.evaluate(p);
          if (v < best) {
            best = v;
            next = p;
          }
        }
      }
      center = next;
      h /= 5.0;
    }
  }
  return probe.result;
}

}  // namespace robustnn
