#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "robustnn/random.hpp"

namespace robustnn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Orthonormal basis of an n3-dimensional linear subspace of R^n2.
/// The basis is stored column-wise (n2 x n3).
class Subspace {
 public:
  /// Validates 1 <= n3 < n2 and orthonormality within 1e-10.
  explicit Subspace(Matrix basis);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }

  /// Coordinates of v in the basis, B^T v.
  Vector coordinates(const Vector& v) const { return basis_.transpose() * v; }
  /// Orthogonal projection B B^T v.
  Vector project(const Vector& v) const { return basis_ * coordinates(v); }

 private:
  Matrix basis_;
};

/// Orthonormalizes the columns of `vectors` with two passes of modified
/// Gram-Schmidt. Returns false if a column is (numerically) dependent.
bool orthonormalize(Matrix& vectors);

/// Haar-random subspace: Gram-Schmidt of n3 i.i.d. standard Gaussian
/// vectors. Rank-deficient draws are redrawn.
Subspace sample_uniform_subspace(int n2, int n3, Rng& rng);
Subspace sample_uniform_subspace(int n2, int n3, std::uint64_t seed);

/// Uniform direction on the unit sphere in R^n.
Vector sample_unit_vector(int n, Rng& rng);

/// Cone/uniform mixture over subspaces. With probability `mixture_weight`
/// the first basis direction is uniform on the double cone
/// {v : |<v, axis>| >= cone_cosine}; the remaining directions are Haar in
/// its orthogonal complement. Otherwise the whole subspace is Haar.
struct KappaBoundedSubspaceConfig {
  int ambient_dim = 0;
  int subspace_dim = 0;
  double mixture_weight = 0.0;
  Vector cone_axis;
  double cone_cosine = 0.5;
};

class KappaBoundedSampler {
 public:
  explicit KappaBoundedSampler(KappaBoundedSubspaceConfig config);

  /// Chooses the cone cosine so that the double cone has uniform mass `q`.
  static KappaBoundedSampler with_cone_mass(int n2, int n3, double p,
                                            const Vector& axis, double q);

  const KappaBoundedSubspaceConfig& config() const { return config_; }
  /// Uniform (Haar) probability of the cone event.
  double cone_mass() const { return cone_mass_; }
  /// Density ratio bound p / q + (1 - p).
  double kappa() const { return kappa_; }
  /// Whether the first-direction cone event holds for a unit direction.
  bool in_cone(const Vector& direction) const;

  Subspace sample(Rng& rng) const;
  Subspace sample(std::uint64_t seed) const;

 private:
  KappaBoundedSubspaceConfig config_;
  double cone_mass_ = 1.0;
  double kappa_ = 1.0;
};

struct AffineProjection {
  Vector point;   ///< origin + B B^T (v - origin)
  Vector coords;  ///< B^T (v - origin)
};

AffineProjection project_point_onto_affine_subspace(const Vector& v,
                                                    const Vector& origin,
                                                    const Subspace& s);

/// Surface area of the unit m-sphere embedded in R^{m+1}:
/// 2 pi^{(m+1)/2} / Gamma((m+1)/2).
double unit_sphere_area(int m);

/// Beta function through log-Gamma.
double beta_function(double a, double b);
double log_beta(double a, double b);

enum class CapMode { exact, upper_bound };

/// Fraction of the unit (n-1)-sphere in R^n within distance eps of a fixed
/// (n-k)-dimensional subspace through the center, i.e. the measure of
/// {x : ||(x_1..x_k)|| <= eps}. `upper_bound` returns the closed-form
/// (2 eps^k / k) A(k-1) A(n-k-1) / A(n-1).
double sphere_cap_fraction(int n, int k, double eps, CapMode mode = CapMode::exact);

}  // namespace robustnn
