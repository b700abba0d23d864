#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace robustnn {

/// Step function of tau on [lo, hi].
///
/// Breakpoints are strictly increasing in [lo, hi). The value at tau is
/// values[#breakpoints < tau]: a step takes effect just after its
/// breakpoint, so the function is left-continuous. This matches the strict
/// "dist < tau" rule of the classifier, under which a point with nearest
/// neighbor distance d still abstains at tau = d and an attack with
/// critical threshold t fails at tau = t.
class PiecewiseConstantFn {
 public:
  struct Piece {
    double left;   ///< exclusive, except for the first piece
    double right;  ///< inclusive
    double value;
  };

  PiecewiseConstantFn(double lo, double hi, std::vector<double> breakpoints,
                      std::vector<double> values);

  static PiecewiseConstantFn constant(double lo, double hi, double value);

  /// f(tau) = #{t in thresholds : t < tau} / denominator, or, when
  /// `complement` is set, (denominator - that count) / denominator.
  /// Thresholds below lo are counted everywhere, thresholds >= hi never.
  static PiecewiseConstantFn counting(double lo, double hi, std::vector<double> thresholds,
                                      double denominator, bool complement = false);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

  /// Index of the piece containing tau (tau clamped to the domain).
  std::size_t piece_index(double tau) const;
  double operator()(double tau) const { return values_[piece_index(tau)]; }

  std::vector<Piece> pieces() const;

  /// Pointwise combination on the common breakpoint set; both functions
  /// must share the domain. Adjacent equal pieces are merged.
  static PiecewiseConstantFn combine(const PiecewiseConstantFn& a, const PiecewiseConstantFn& b,
                                     const std::function<double(double, double)>& op);

  PiecewiseConstantFn map(const std::function<double(double)>& op) const;

  /// The same function on a sub-interval of the domain.
  PiecewiseConstantFn restricted(double lo, double hi) const;

  /// Largest value and a point attaining it (right end of the first
  /// maximal piece).
  double max_value() const;
  double argmax() const;
  double min_value() const;
  double argmin() const;

  /// Removes breakpoints between exactly equal values.
  void coalesce();

  bool operator==(const PiecewiseConstantFn&) const = default;

 private:
  double lo_;
  double hi_;
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

PiecewiseConstantFn operator+(const PiecewiseConstantFn& a, const PiecewiseConstantFn& b);
PiecewiseConstantFn operator*(double scale, const PiecewiseConstantFn& f);

}  // namespace robustnn
