#include "robustnn/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace robustnn {

PiecewiseConstantFn::PiecewiseConstantFn(double lo, double hi, std::vector<double> breakpoints,
                                         std::vector<double> values)
    : lo_(lo), hi_(hi), breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo <= hi)) {
    throw std::invalid_argument("piecewise function needs a finite interval lo <= hi");
  }
  if (values_.size() != breakpoints_.size() + 1) {
    throw std::invalid_argument("piecewise function needs one more value than breakpoints");
  }
  for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
    if (!(breakpoints_[j] >= lo && breakpoints_[j] < hi)) {
      throw std::invalid_argument("breakpoint outside [lo, hi)");
    }
    if (j > 0 && !(breakpoints_[j] > breakpoints_[j - 1])) {
      throw std::invalid_argument("breakpoints must be strictly increasing");
    }
  }
}

PiecewiseConstantFn PiecewiseConstantFn::constant(double lo, double hi, double value) {
  return PiecewiseConstantFn(lo, hi, {}, {value});
}

PiecewiseConstantFn PiecewiseConstantFn::counting(double lo, double hi,
                                                  std::vector<double> thresholds,
                                                  double denominator, bool complement) {
  if (!(denominator > 0.0)) throw std::invalid_argument("denominator must be positive");
  std::sort(thresholds.begin(), thresholds.end());
  std::size_t below = 0;
  std::vector<double> bps;
  std::vector<std::size_t> counts;
  for (double t : thresholds) {
    if (t < lo) {
      ++below;
    } else if (t < hi) {
      if (bps.empty() || t > bps.back()) {
        bps.push_back(t);
        counts.push_back(1);
      } else {
        ++counts.back();
      }
    }
  }
  const auto total = static_cast<std::size_t>(std::llround(denominator));
  auto value = [&](std::size_t count) {
    const double c = complement ? static_cast<double>(total - count) : static_cast<double>(count);
    return c / denominator;
  };
  std::vector<double> values{value(below)};
  std::size_t running = below;
  for (std::size_t c : counts) {
    running += c;
    values.push_back(value(running));
  }
  return PiecewiseConstantFn(lo, hi, std::move(bps), std::move(values));
}

std::size_t PiecewiseConstantFn::piece_index(double tau) const {
  return static_cast<std::size_t>(
      std::lower_bound(breakpoints_.begin(), breakpoints_.end(), tau) - breakpoints_.begin());
}

std::vector<PiecewiseConstantFn::Piece> PiecewiseConstantFn::pieces() const {
  std::vector<Piece> out;
  double left = lo_;
  for (std::size_t j = 0; j < values_.size(); ++j) {
    const double right = j < breakpoints_.size() ? breakpoints_[j] : hi_;
    out.push_back({left, right, values_[j]});
    left = right;
  }
  return out;
}

PiecewiseConstantFn PiecewiseConstantFn::combine(const PiecewiseConstantFn& a,
                                                 const PiecewiseConstantFn& b,
                                                 const std::function<double(double, double)>& op) {
  if (a.lo_ != b.lo_ || a.hi_ != b.hi_) {
    throw std::invalid_argument("piecewise functions live on different domains");
  }
  std::vector<double> bps;
  std::vector<double> values{op(a.values_[0], b.values_[0])};
  std::size_t i = 0, j = 0;
  while (i < a.breakpoints_.size() || j < b.breakpoints_.size()) {
    double next;
    if (j == b.breakpoints_.size() ||
        (i < a.breakpoints_.size() && a.breakpoints_[i] < b.breakpoints_[j])) {
      next = a.breakpoints_[i++];
    } else if (i == a.breakpoints_.size() || b.breakpoints_[j] < a.breakpoints_[i]) {
      next = b.breakpoints_[j++];
    } else {
      next = a.breakpoints_[i];
      ++i;
      ++j;
    }
    bps.push_back(next);
    values.push_back(op(a.values_[i], b.values_[j]));
  }
  PiecewiseConstantFn out(a.lo_, a.hi_, std::move(bps), std::move(values));
  out.coalesce();
  return out;
}

PiecewiseConstantFn PiecewiseConstantFn::map(const std::function<double(double)>& op) const {
  std::vector<double> values;
  values.reserve(values_.size());
  for (double v : values_) values.push_back(op(v));
  PiecewiseConstantFn out(lo_, hi_, breakpoints_, std::move(values));
  out.coalesce();
  return out;
}

PiecewiseConstantFn PiecewiseConstantFn::restricted(double lo, double hi) const {
  if (!(lo >= lo_ && hi <= hi_ && lo <= hi)) {
    throw std::invalid_argument("restriction interval not inside the domain");
  }
  const std::size_t first = piece_index(lo);
  std::vector<double> bps;
  std::vector<double> values{values_[first]};
  for (std::size_t j = first; j < breakpoints_.size() && breakpoints_[j] < hi; ++j) {
    if (breakpoints_[j] < lo) continue;
    bps.push_back(breakpoints_[j]);
    values.push_back(values_[j + 1]);
  }
  // A breakpoint exactly at the new lo only affects the open interval
  // after it, so it survives; anything earlier is folded into values[0].
  PiecewiseConstantFn out(lo, hi, std::move(bps), std::move(values));
  out.coalesce();
  return out;
}

double PiecewiseConstantFn::max_value() const {
  return *std::max_element(values_.begin(), values_.end());
}

double PiecewiseConstantFn::min_value() const {
  return *std::min_element(values_.begin(), values_.end());
}

double PiecewiseConstantFn::argmax() const {
  const auto j = static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
  return j < breakpoints_.size() ? breakpoints_[j] : hi_;
}

double PiecewiseConstantFn::argmin() const {
  const auto j = static_cast<std::size_t>(std::min_element(values_.begin(), values_.end()) - values_.begin());
  return j < breakpoints_.size() ? breakpoints_[j] : hi_;
}

void PiecewiseConstantFn::coalesce() {
  std::vector<double> bps;
  std::vector<double> values{values_[0]};
  for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
    if (values_[j + 1] == values.back()) continue;
    bps.push_back(breakpoints_[j]);
    values.push_back(values_[j + 1]);
  }
  breakpoints_ = std::move(bps);
  values_ = std::move(values);
}

PiecewiseConstantFn operator+(const PiecewiseConstantFn& a, const PiecewiseConstantFn& b) {
  return PiecewiseConstantFn::combine(a, b, [](double x, double y) { return x + y; });
}

PiecewiseConstantFn operator*(double scale, const PiecewiseConstantFn& f) {
  return f.map([scale](double v) { return scale * v; });
}

}  // namespace robustnn
