#include "robustnn/geometry.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace robustnn {

namespace {

constexpr double kOrthonormalTol = 1e-10;

void check_dims(int n2, int n3) {
  if (n2 < 2 || n3 < 1 || n3 >= n2) {
    throw DimensionError("subspace dimension must satisfy 1 <= n3 < n2 (got n2=" +
                         std::to_string(n2) + ", n3=" + std::to_string(n3) + ")");
  }
}

Matrix gaussian_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

}  // namespace

Subspace::Subspace(Matrix basis) : basis_(std::move(basis)) {
  check_dims(static_cast<int>(basis_.rows()), static_cast<int>(basis_.cols()));
  const Matrix gram = basis_.transpose() * basis_;
  const double err =
      (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (!(err <= kOrthonormalTol)) {
    throw DimensionError("subspace basis is not orthonormal (max |B^T B - I| = " +
                         std::to_string(err) + ")");
  }
}

bool orthonormalize(Matrix& vectors) {
  const Eigen::Index cols = vectors.cols();
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double original = vectors.col(j).norm();
    if (!(original > 0.0) || !std::isfinite(original)) return false;
    // Two sweeps: the second removes the drift left by the first.
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        vectors.col(j) -= vectors.col(i).dot(vectors.col(j)) * vectors.col(i);
      }
    }
    const double norm = vectors.col(j).norm();
    if (norm <= 1e-10 * original) return false;
    vectors.col(j) /= norm;
  }
  return true;
}

Subspace sample_uniform_subspace(int n2, int n3, Rng& rng) {
  check_dims(n2, n3);
  for (;;) {
    Matrix g = gaussian_matrix(n2, n3, rng);
    if (orthonormalize(g)) return Subspace(std::move(g));
  }
}

Subspace sample_uniform_subspace(int n2, int n3, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_uniform_subspace(n2, n3, rng);
}

Vector sample_unit_vector(int n, Rng& rng) {
  if (n < 1) throw DimensionError("unit vector dimension must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
    const double norm = v.norm();
    if (norm > 1e-300) return v / norm;
  }
}

KappaBoundedSampler::KappaBoundedSampler(KappaBoundedSubspaceConfig config)
    : config_(std::move(config)) {
  check_dims(config_.ambient_dim, config_.subspace_dim);
  if (!(config_.mixture_weight >= 0.0 && config_.mixture_weight <= 1.0)) {
    throw ConfigError("mixture weight must lie in [0, 1]");
  }
  if (!(config_.cone_cosine > 0.0 && config_.cone_cosine < 1.0)) {
    throw ConfigError("cone cosine must lie in (0, 1); an empty cone has no mass");
  }
  if (config_.cone_axis.size() != config_.ambient_dim) {
    throw DimensionError("cone axis dimension does not match ambient dimension");
  }
  const double axis_norm = config_.cone_axis.norm();
  if (!(axis_norm > 0.0)) throw ConfigError("cone axis must be nonzero");
  config_.cone_axis /= axis_norm;

  // |<v, a>| >= c  <=>  distance of v from the axis line is <= sqrt(1 - c^2).
  const int n = config_.ambient_dim;
  const double radius = std::sqrt(1.0 - config_.cone_cosine * config_.cone_cosine);
  cone_mass_ = sphere_cap_fraction(n, n - 1, radius, CapMode::exact);
  if (!(cone_mass_ > 0.0)) throw ConfigError("cone has zero uniform mass");
  kappa_ = config_.mixture_weight / cone_mass_ + (1.0 - config_.mixture_weight);
}

KappaBoundedSampler KappaBoundedSampler::with_cone_mass(int n2, int n3, double p,
                                                        const Vector& axis,
                                                        double q) {
  check_dims(n2, n3);
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("cone mass must lie in (0, 1)");
  auto mass = [n2](double c) {
    return sphere_cap_fraction(n2, n2 - 1, std::sqrt(1.0 - c * c), CapMode::exact);
  };
  double lo = 0.0, hi = 1.0;  // mass(lo) = 1 > q > 0 = mass(hi)
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) > q) lo = mid; else hi = mid;
  }
  KappaBoundedSubspaceConfig cfg;
  cfg.ambient_dim = n2;
  cfg.subspace_dim = n3;
  cfg.mixture_weight = p;
  cfg.cone_axis = axis;
  cfg.cone_cosine = 0.5 * (lo + hi);
  return KappaBoundedSampler(std::move(cfg));
}

bool KappaBoundedSampler::in_cone(const Vector& direction) const {
  return std::abs(direction.dot(config_.cone_axis)) >=
         config_.cone_cosine * direction.norm();
}

Subspace KappaBoundedSampler::sample(Rng& rng) const {
  const int n2 = config_.ambient_dim;
  const int n3 = config_.subspace_dim;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) >= config_.mixture_weight) return sample_uniform_subspace(n2, n3, rng);

  Vector first;
  for (;;) {
    first = sample_unit_vector(n2, rng);
    if (in_cone(first)) break;
  }
  for (;;) {
    Matrix g(n2, n3);
    g.col(0) = first;
    if (n3 > 1) {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int c = 1; c < n3; ++c)
        for (int r = 0; r < n2; ++r) g(r, c) = normal(rng);
    }
    // Gram-Schmidt keeps column 0 fixed, so the rest is Haar in its complement.
    if (orthonormalize(g)) return Subspace(std::move(g));
  }
}

Subspace KappaBoundedSampler::sample(std::uint64_t seed) const {
  Rng rng = make_rng(seed);
  return sample(rng);
}

AffineProjection project_point_onto_affine_subspace(const Vector& v,
                                                    const Vector& origin,
                                                    const Subspace& s) {
  if (v.size() != s.ambient_dim() || origin.size() != s.ambient_dim()) {
    throw DimensionError("point, origin and subspace dimensions disagree");
  }
  AffineProjection out;
  out.coords = s.coordinates(v - origin);
  out.point = origin + s.basis() * out.coords;
  return out;
}

double unit_sphere_area(int m) {
  if (m < 0) throw DimensionError("sphere dimension must be nonnegative");
  const double h = 0.5 * (m + 1);
  return 2.0 * std::exp(h * std::log(std::numbers::pi) - std::lgamma(h));
}

double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::domain_error("beta function arguments must be positive");
  }
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_function(double a, double b) { return std::exp(log_beta(a, b)); }

double sphere_cap_fraction(int n, int k, double eps, CapMode mode) {
  if (k < 1 || k >= n) {
    throw DimensionError("sphere cap requires 1 <= k < n (got n=" + std::to_string(n) +
                         ", k=" + std::to_string(k) + ")");
  }
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw std::domain_error("sphere cap radius must lie in [0, 1]");
  }
  // A(k-1) A(n-k-1) / A(n-1) = 2 / B(k/2, (n-k)/2).
  const double area_ratio = 2.0 * std::exp(-log_beta(0.5 * k, 0.5 * (n - k)));
  if (mode == CapMode::upper_bound) {
    return 2.0 * std::pow(eps, k) / k * area_ratio;
  }
  if (eps == 0.0) return 0.0;
  if (eps == 1.0) return 1.0;

  // With rho = sin(theta) the integrand rho^{k-1} (1 - rho^2)^{(n-k-2)/2} d rho
  // becomes sin^{k-1} cos^{n-k-1} d theta, which is bounded on [0, pi/2].
  const int sin_power = k - 1;
  const int cos_power = n - k - 1;
  auto integrand = [=](double theta) {
    return std::pow(std::sin(theta), sin_power) * std::pow(std::cos(theta), cos_power);
  };
  double error = 0.0;
  const double upper = std::asin(eps);
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, upper, 12, 1e-13, &error);
  return std::min(1.0, area_ratio * integral);
}

}  // namespace robustnn
