#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>

#include "robustnn/classifier.hpp"
#include "robustnn/qp.hpp"

namespace robustnn {

/// A verified adversarial feature point x + v, v in S.
struct AttackSuccess {
  Vector adv_point;
  std::size_t target_index = 0;     ///< training point the attack moved toward
  double distance_to_target = 0.0;
};

/// Success with witness, or the certificate "no adversarial example".
struct AttackResult {
  std::optional<AttackSuccess> success;

  bool succeeded() const { return success.has_value(); }
  static AttackResult none() { return {}; }
};

struct AttackOptions {
  ProjectionOptions qp;
  /// Restrict perturbations to the ray {x + t b : t >= 0} (n3 = 1 only)
  /// instead of the full line/subspace.
  bool directed_ray = false;
};

/// Raised when the constrained projection fails to converge for some
/// candidate; no success is ever reported on the basis of such a solve.
class AttackAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact attack on the thresholded 1-NN rule over the affine subspace
/// x + S. For every differently-labelled training point x_i, the closest
/// point of x + S to x_i is used directly when no same-label point is
/// strictly closer to it; otherwise the closest point of x + S that is at
/// least as close to x_i as to every same-label point is computed. The
/// first candidate within tau of its target (training index order) that
/// re-verifies through the classifier is returned. Candidates sitting on
/// a tie boundary are pushed into the interior before verification.
AttackResult exact_attack(const LabeledDataset& train, const Vector& x, int y_true,
                          const Subspace& s, double tau, const AttackOptions& options = {});
AttackResult exact_attack(const RobustModel& model, const Vector& x, int y_true,
                          const Subspace& s, const AttackOptions& options = {});

/// The smallest tau at which exact_attack succeeds: the minimum candidate
/// distance (+infinity when every candidate region is empty). The attack
/// succeeds for tau strictly above this value.
double critical_threshold(const LabeledDataset& train, const Vector& x, int y_true,
                          const Subspace& s, const AttackOptions& options = {});

/// Greedy attack: projects every training feature onto x + S and returns
/// the first projection that the classifier labels wrongly. Sound, not
/// complete.
AttackResult approx_attack(const LabeledDataset& train, const Vector& x, int y_true,
                           const Subspace& s, double tau, const AttackOptions& options = {});
AttackResult approx_attack(const RobustModel& model, const Vector& x, int y_true,
                           const Subspace& s, const AttackOptions& options = {});

struct LineGrid {
  double start = 1e-3;  ///< smallest magnitude
  double ratio = 1.5;   ///< geometric growth
  int steps = 60;       ///< magnitudes start * ratio^j for j = 0..steps
};

struct LineAttackResult {
  bool success = false;
  std::optional<Vector> witness;
  double magnitude = 0.0;  ///< signed step of the witness
};

using Predictor = std::function<Outcome(const Vector&)>;

/// Scans x + t * direction over t = +-start * ratio^j and reports the first
/// point that receives a non-abstaining label other than y_true.
LineAttackResult line_attack(const Predictor& classifier, const Vector& x, int y_true,
                             const Vector& direction, const LineGrid& grid = {});

/// Exact attack on a linear argmax model: succeeds iff x is already
/// misclassified or some score difference w_k - w_y has a nonzero
/// component in S.
bool attack_linear_exact(const LinearModel& model, const Vector& x, int y_true,
                         const Subspace& s);

struct OracleOptions {
  std::size_t grid_density = 0;  ///< points per axis; 0 = 2000 (n3 = 1) or 600 (n3 = 2)
  bool directed_ray = false;
};

struct OracleResult {
  bool success = false;
  std::optional<Vector> witness;
  /// Smallest nearest-neighbor distance among probes whose nearest
  /// neighbor has a wrong label (an upper estimate of the critical tau).
  double best_threshold = 0.0;
};

/// Test oracle: dense grid over the subspace coordinates in a box of
/// half-width 4 * (max pairwise data distance), refined around the most
/// promising grid cells, every probe classified by predict_thresholded.
/// Refuses n3 > 2 or more than 32 training points.
OracleResult brute_force_attack_oracle(const LabeledDataset& train, const Vector& x,
                                       int y_true, const Subspace& s, double tau,
                                       const OracleOptions& options = {});

}  // namespace robustnn
