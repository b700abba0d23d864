#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "robustnn/geometry.hpp"

namespace robustnn {

/// The closed halfspace {z : normal . z <= offset}.
struct Halfspace {
  Vector normal;
  double offset = 0.0;
};

/// Halfspace of points at least as close to `keep` as to `other`:
/// ||z - keep|| <= ||z - other||  <=>  2 (other - keep) . z <= ||other||^2 - ||keep||^2.
Halfspace bisector_halfspace(const Vector& keep, const Vector& other);

struct ProjectionOptions {
  double tol = 1e-8;                   ///< feasibility tolerance (distance units)
  std::size_t max_iterations = 100000;
};

class NonConverged : public std::runtime_error {
 public:
  NonConverged(const std::string& what, Vector best_iterate)
      : std::runtime_error(what), best_iterate_(std::move(best_iterate)) {}
  const Vector& best_iterate() const { return best_iterate_; }

 private:
  Vector best_iterate_;
};

/// Euclidean projection of `center` onto the polyhedron {c : A c <= b}.
/// Returns nullopt when the polyhedron is empty. Dual active-set method
/// (Goldfarb-Idnani with identity Hessian); one-dimensional problems use
/// interval intersection.
std::optional<Vector> project_onto_polyhedron(const Vector& center, const Matrix& a,
                                              const Vector& b,
                                              const ProjectionOptions& options = {});

/// argmin ||z - target|| over (origin + S) intersected with all constraints,
/// or nullopt if that set is empty.
std::optional<Vector> solve_constrained_projection(const Vector& target,
                                                   const std::vector<Halfspace>& constraints,
                                                   const Vector& origin, const Subspace& s,
                                                   const ProjectionOptions& options = {});

}  // namespace robustnn
