#include "robustnn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace robustnn {

void ClassifierConfig::validate() const {
  if (!std::isfinite(tau) || tau < 0.0) throw ConfigError("tau must be finite and >= 0");
  if (!std::isfinite(sigma) || sigma < 0.0) throw ConfigError("sigma must be finite and >= 0");
}

SeparationResult preprocess_separation(const LabeledDataset& ds, double sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  const double sigma_sq = sigma * sigma;
  const auto& f = ds.features();
  std::vector<bool> remove(ds.size(), false);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = i + 1; j < ds.size(); ++j) {
      if (ds.label(i) == ds.label(j)) continue;
      const double d = (f.row(static_cast<Eigen::Index>(i)) - f.row(static_cast<Eigen::Index>(j))).squaredNorm();
      if (d < sigma_sq) remove[i] = remove[j] = true;
    }
  }
  SeparationResult out{ds, {}, {}};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (remove[i] ? out.removed_indices : out.kept_indices).push_back(i);
  }
  if (out.kept_indices.empty()) {
    throw EmptyModelError("separation radius removes every training point");
  }
  out.kept = ds.subset(out.kept_indices);
  return out;
}

Outcome predict_thresholded(const LabeledDataset& train, const Vector& x, double tau) {
  const Neighbor nn = nearest_neighbor(train, x);
  if (nn.distance < tau) return Outcome::label(train.label(nn.index));
  return Outcome::abstain();
}

RobustModel RobustModel::build(const LabeledDataset& ds, ClassifierConfig config) {
  config.validate();
  SeparationResult sep = preprocess_separation(ds, config.sigma);
  return RobustModel(std::move(sep.kept), config, std::move(sep.kept_indices),
                     std::move(sep.removed_indices));
}

RobustModel RobustModel::from_parts(const LabeledDataset& original, ClassifierConfig config,
                                    std::vector<std::size_t> removed_indices) {
  config.validate();
  std::sort(removed_indices.begin(), removed_indices.end());
  std::vector<std::size_t> kept;
  std::size_t r = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (r < removed_indices.size() && removed_indices[r] == i) {
      ++r;
      continue;
    }
    kept.push_back(i);
  }
  if (r != removed_indices.size()) throw std::invalid_argument("removed index out of range or repeated");
  if (kept.empty()) throw EmptyModelError("model has no training points");
  LabeledDataset train = original.subset(kept);
  return RobustModel(std::move(train), config, std::move(kept), std::move(removed_indices));
}

RobustModel RobustModel::with_tau(double tau) const {
  ClassifierConfig cfg = config_;
  cfg.tau = tau;
  cfg.validate();
  return RobustModel(train_, cfg, kept_, removed_);
}

PointSpecificClassifier::PointSpecificClassifier(LabeledDataset set_a,
                                                 const LabeledDataset& set_b)
    : set_a_(std::move(set_a)) {
  if (set_a_.dim() != set_b.dim()) throw DimensionError("set A and set B dimensions differ");
  thresholds_.assign(set_a_.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < set_a_.size(); ++i) {
    const Vector a = set_a_.point(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < set_b.size(); ++j) {
      if (set_b.label(j) == set_a_.label(i)) continue;
      best = std::min(best, squared_distance(set_b, j, a));
    }
    if (std::isinf(best)) unbounded_.push_back(i);
    else thresholds_[i] = std::sqrt(best);
  }
}

Outcome PointSpecificClassifier::predict(const Vector& x) const {
  const Neighbor nn = nearest_neighbor(set_a_, x);
  if (nn.distance < thresholds_[nn.index]) return Outcome::label(set_a_.label(nn.index));
  return Outcome::abstain();
}

Outcome predict_point_specific(const LabeledDataset& set_a, const LabeledDataset& set_b,
                               const Vector& x) {
  return PointSpecificClassifier(set_a, set_b).predict(x);
}

std::pair<LabeledDataset, LabeledDataset> random_split(const LabeledDataset& ds,
                                                       std::uint64_t seed) {
  if (ds.size() < 2) throw std::invalid_argument("need at least two points to split");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t half = (ds.size() + 1) / 2;
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {ds.subset(a), ds.subset(b)};
}

int LinearModel::predict(const Vector& x) const {
  const Vector s = scores(x);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < s.size(); ++k) {
    if (s(k) > s(best)) best = k;
  }
  return classes[static_cast<std::size_t>(best)];
}

LinearModel train_linear_baseline(const LabeledDataset& ds, double ridge) {
  const std::vector<int> classes = ds.classes();
  if (classes.size() < 2) throw std::invalid_argument("linear baseline needs at least two classes");
  if (!(ridge > 0.0)) throw ConfigError("ridge parameter must be positive");

  const auto m = static_cast<Eigen::Index>(ds.size());
  const Eigen::Index n = ds.dim();
  Matrix x(m, n + 1);
  x.leftCols(n) = ds.features();
  x.col(n).setOnes();
  Matrix targets = -Matrix::Ones(m, static_cast<Eigen::Index>(classes.size()));
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), ds.label(static_cast<std::size_t>(i)));
    targets(i, it - classes.begin()) = 1.0;
  }
  const Matrix gram = x.transpose() * x;
  const Matrix rhs = x.transpose() * targets;

  double lambda = ridge;
  for (int attempt = 0; attempt <= 3; ++attempt, lambda *= 10.0) {
    Matrix system = gram + lambda * Matrix::Identity(n + 1, n + 1);
    Eigen::LDLT<Matrix> ldlt(system);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) continue;
    const Vector diag = ldlt.vectorD();
    if (diag.minCoeff() <= 1e-14 * std::max(1.0, diag.maxCoeff())) continue;
    const Matrix w = ldlt.solve(rhs);
    if (!w.allFinite()) continue;
    LinearModel model;
    model.weights = w.topRows(n).transpose();
    model.biases = w.row(n).transpose();
    model.classes = classes;
    return model;
  }
  throw SingularSystemError("ridge normal equations stayed singular after increasing the ridge term");
}

}  // namespace robustnn
