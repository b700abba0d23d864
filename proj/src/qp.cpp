#include "robustnn/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace robustnn {

Halfspace bisector_halfspace(const Vector& keep, const Vector& other) {
  return {2.0 * (other - keep), other.squaredNorm() - keep.squaredNorm()};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Normalized {
  Matrix a;  // unit rows
  Vector b;
  bool infeasible = false;
};

// Scales every row to unit norm so slacks are distances; rows that are
// (numerically) zero are either trivially satisfied or prove infeasibility.
Normalized normalize_rows(const Matrix& a, const Vector& b, double tol) {
  Normalized out;
  std::vector<Eigen::Index> keep;
  std::vector<double> norms;
  double scale = 0.0;
  for (Eigen::Index j = 0; j < a.rows(); ++j) scale = std::max(scale, a.row(j).norm());
  for (Eigen::Index j = 0; j < a.rows(); ++j) {
    const double norm = a.row(j).norm();
    if (norm <= 1e-13 * std::max(scale, 1e-300)) {
      // 0 . c <= b_j holds iff b_j >= 0; compare in the row's own units.
      if (b(j) < -tol * std::max(scale, 1.0)) out.infeasible = true;
      continue;
    }
    keep.push_back(j);
    norms.push_back(norm);
  }
  out.a.resize(static_cast<Eigen::Index>(keep.size()), a.cols());
  out.b.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.a.row(static_cast<Eigen::Index>(r)) = a.row(keep[r]) / norms[r];
    out.b(static_cast<Eigen::Index>(r)) = b(keep[r]) / norms[r];
  }
  return out;
}

std::optional<Vector> project_interval(double center, const Normalized& p, double tol) {
  double lo = -kInf, hi = kInf;
  for (Eigen::Index j = 0; j < p.a.rows(); ++j) {
    const double coef = p.a(j, 0);  // +-1 after normalization
    const double bound = p.b(j) / coef;
    if (coef > 0.0) hi = std::min(hi, bound);
    else lo = std::max(lo, bound);
  }
  if (lo > hi) {
    if (lo - hi > tol) return std::nullopt;
    Vector mid(1);
    mid(0) = 0.5 * (lo + hi);
    return mid;
  }
  Vector out(1);
  out(0) = std::clamp(center, lo, hi);
  return out;
}

}  // namespace

std::optional<Vector> project_onto_polyhedron(const Vector& center, const Matrix& a,
                                              const Vector& b,
                                              const ProjectionOptions& options) {
  if (a.cols() != center.size() || a.rows() != b.size()) {
    throw DimensionError("constraint matrix does not match the problem dimension");
  }
  const double tol = options.tol;
  const Normalized p = normalize_rows(a, b, tol);
  if (p.infeasible) return std::nullopt;
  if (center.size() == 1) return project_interval(center(0), p, tol);

  // Dual active-set iteration on  min 1/2 ||x - center||^2  s.t.  n_j . x >= e_j
  // with n_j = -a_j, e_j = -b_j. The slack n_j . x - e_j equals b_j - a_j . x.
  const Eigen::Index n = center.size();
  const Eigen::Index count = p.a.rows();
  Vector x = center;
  std::vector<Eigen::Index> active;
  std::vector<double> duals;
  Matrix normals(n, 0);
  std::size_t iterations = 0;

  auto slack = [&](Eigen::Index j) { return p.b(j) - p.a.row(j).dot(x); };
  auto drop = [&](std::size_t k) {
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(k));
    duals.erase(duals.begin() + static_cast<std::ptrdiff_t>(k));
    Matrix reduced(n, normals.cols() - 1);
    for (Eigen::Index c = 0, o = 0; c < normals.cols(); ++c) {
      if (c == static_cast<Eigen::Index>(k)) continue;
      reduced.col(o++) = normals.col(c);
    }
    normals = std::move(reduced);
  };

  for (;;) {
    Eigen::Index violated = -1;
    double worst = -tol;
    for (Eigen::Index j = 0; j < count; ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      const double s = slack(j);
      if (s < worst) {
        worst = s;
        violated = j;
      }
    }
    if (violated < 0) return x;

    const Vector np = -p.a.row(violated).transpose();
    double dual_p = 0.0;
    for (;;) {
      if (++iterations > options.max_iterations) {
        throw NonConverged("constrained projection exceeded the iteration cap", x);
      }
      Vector r(static_cast<Eigen::Index>(active.size()));
      Vector z = np;
      if (!active.empty()) {
        r = normals.colPivHouseholderQr().solve(np);
        z = np - normals * r;
      }
      double t1 = kInf;
      std::size_t leaving = 0;
      for (std::size_t k = 0; k < active.size(); ++k) {
        const double rk = r(static_cast<Eigen::Index>(k));
        if (rk > 1e-14) {
          const double ratio = duals[k] / rk;
          if (ratio < t1) {
            t1 = ratio;
            leaving = k;
          }
        }
      }
      const double zz = z.squaredNorm();
      const double t2 = zz > 1e-24 ? -slack(violated) / zz : kInf;

      if (t1 == kInf && t2 == kInf) return std::nullopt;  // Farkas: no feasible point
      if (t2 == kInf) {
        for (std::size_t k = 0; k < active.size(); ++k) duals[k] -= t1 * r(static_cast<Eigen::Index>(k));
        dual_p += t1;
        drop(leaving);
        continue;
      }
      const double t = std::min(t1, t2);
      x += t * z;
      for (std::size_t k = 0; k < active.size(); ++k) duals[k] -= t * r(static_cast<Eigen::Index>(k));
      dual_p += t;
      if (t2 <= t1) {
        active.push_back(violated);
        duals.push_back(dual_p);
        normals.conservativeResize(n, normals.cols() + 1);
        normals.col(normals.cols() - 1) = np;
        break;
      }
      drop(leaving);
    }
  }
}

std::optional<Vector> solve_constrained_projection(const Vector& target,
                                                   const std::vector<Halfspace>& constraints,
                                                   const Vector& origin, const Subspace& s,
                                                   const ProjectionOptions& options) {
  if (target.size() != s.ambient_dim() || origin.size() != s.ambient_dim()) {
    throw DimensionError("target, origin and subspace dimensions disagree");
  }
  if (!(options.tol > 0.0)) throw ConfigError("tolerance must be positive");
  const Matrix& basis = s.basis();
  Matrix a(static_cast<Eigen::Index>(constraints.size()), s.dim());
  Vector b(static_cast<Eigen::Index>(constraints.size()));
  Eigen::Index rows = 0;
  for (const auto& h : constraints) {
    if (h.normal.size() != s.ambient_dim()) throw DimensionError("halfspace dimension mismatch");
    const Vector reduced = basis.transpose() * h.normal;
    const double offset = h.offset - h.normal.dot(origin);
    const double norm = h.normal.norm();
    if (reduced.norm() <= 1e-13 * norm) {
      // Normal orthogonal to S: the constraint is constant on origin + S.
      if (offset < -options.tol * norm) return std::nullopt;
      continue;
    }
    a.row(rows) = reduced.transpose();
    b(rows) = offset;
    ++rows;
  }
  a.conservativeResize(rows, s.dim());
  b.conservativeResize(rows);
  const Vector center = s.coordinates(target - origin);
  const auto coords = project_onto_polyhedron(center, a, b, options);
  if (!coords) return std::nullopt;
  return Vector(origin + basis * *coords);
}

}  // namespace robustnn
