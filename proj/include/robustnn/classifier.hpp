#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "robustnn/dataset.hpp"

namespace robustnn {

struct ClassifierConfig {
  double tau = 0.0;    ///< abstention threshold
  double sigma = 0.0;  ///< separation radius used by preprocessing

  void validate() const;
};

/// Either a predicted label or "don't know".
class Outcome {
 public:
  static Outcome label(int y) { return Outcome(y); }
  static Outcome abstain() { return Outcome(); }

  bool abstained() const { return !label_.has_value(); }
  /// Precondition: !abstained().
  int label() const { return *label_; }

  /// True when the outcome is a non-abstaining label different from y.
  bool is_error_for(int y) const { return label_.has_value() && *label_ != y; }

  bool operator==(const Outcome&) const = default;

 private:
  Outcome() = default;
  explicit Outcome(int y) : label_(y) {}
  std::optional<int> label_;
};

class EmptyModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SeparationResult {
  LabeledDataset kept;
  std::vector<std::size_t> kept_indices;
  std::vector<std::size_t> removed_indices;
};

/// Removes, in one simultaneous pass over the original data, every point
/// whose nearest differently-labelled point is closer than sigma.
/// Throws EmptyModelError when nothing survives.
SeparationResult preprocess_separation(const LabeledDataset& ds, double sigma);

/// Thresholded 1-NN rule: label of the nearest training point (lowest
/// index on ties) when its distance is strictly below tau, else abstain.
Outcome predict_thresholded(const LabeledDataset& train, const Vector& x, double tau);

/// The abstaining classifier: separated training set plus threshold.
class RobustModel {
 public:
  /// Runs preprocess_separation(ds, config.sigma).
  static RobustModel build(const LabeledDataset& ds, ClassifierConfig config);
  /// Rebuilds a model from stored bookkeeping (model files).
  static RobustModel from_parts(const LabeledDataset& original, ClassifierConfig config,
                                std::vector<std::size_t> removed_indices);

  const LabeledDataset& train() const { return train_; }
  const ClassifierConfig& config() const { return config_; }
  double tau() const { return config_.tau; }
  const std::vector<std::size_t>& removed_indices() const { return removed_; }
  const std::vector<std::size_t>& kept_indices() const { return kept_; }

  /// Same training set, different threshold.
  RobustModel with_tau(double tau) const;

  Outcome predict(const Vector& x) const { return predict_thresholded(train_, x, config_.tau); }

 private:
  RobustModel(LabeledDataset train, ClassifierConfig config,
              std::vector<std::size_t> kept, std::vector<std::size_t> removed)
      : train_(std::move(train)), config_(config), kept_(std::move(kept)),
        removed_(std::move(removed)) {}

  LabeledDataset train_;
  ClassifierConfig config_;
  std::vector<std::size_t> kept_;
  std::vector<std::size_t> removed_;
};

inline Outcome predict(const RobustModel& model, const Vector& x) { return model.predict(x); }

/// Variant with a per-training-point threshold: tau_i is the distance from
/// A_i to the nearest point of B with a different label.
class PointSpecificClassifier {
 public:
  PointSpecificClassifier(LabeledDataset set_a, const LabeledDataset& set_b);

  const LabeledDataset& set_a() const { return set_a_; }
  const std::vector<double>& thresholds() const { return thresholds_; }
  /// Indices of A points with no differently-labelled point in B
  /// (their threshold is +infinity).
  const std::vector<std::size_t>& unbounded_points() const { return unbounded_; }

  Outcome predict(const Vector& x) const;

 private:
  LabeledDataset set_a_;
  std::vector<double> thresholds_;
  std::vector<std::size_t> unbounded_;
};

Outcome predict_point_specific(const LabeledDataset& set_a, const LabeledDataset& set_b,
                               const Vector& x);

/// Seeded random split into two halves (first half gets ceil(m/2) points).
std::pair<LabeledDataset, LabeledDataset> random_split(const LabeledDataset& ds,
                                                       std::uint64_t seed);

/// One-vs-rest linear scorer; predict returns the class with the largest
/// score, ties to the lowest class id. Never abstains.
struct LinearModel {
  Matrix weights;           ///< K x n2
  Vector biases;            ///< K
  std::vector<int> classes; ///< class id of row k, ascending

  int predict(const Vector& x) const;
  Vector scores(const Vector& x) const { return weights * x + biases; }
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ridge regression on +-1 targets, one regressor per class. The ridge
/// term is increased tenfold (up to three times) if the normal equations
/// are singular.
LinearModel train_linear_baseline(const LabeledDataset& ds, double ridge = 1e-3);

inline int predict_linear(const LinearModel& model, const Vector& x) { return model.predict(x); }

}  // namespace robustnn
