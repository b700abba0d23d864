#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "robustnn/piecewise.hpp"
#include "robustnn/random.hpp"

using namespace robustnn;

namespace {

PiecewiseConstantFn random_fn(Rng& rng, double lo, double hi, int max_bps) {
  std::uniform_real_distribution<double> where(lo, hi);
  std::uniform_int_distribution<int> count(0, max_bps), level(0, 4);
  std::vector<double> bps;
  for (int i = count(rng); i > 0; --i) bps.push_back(where(rng));
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
  std::vector<double> values;
  for (std::size_t i = 0; i <= bps.size(); ++i) values.push_back(level(rng) / 4.0);
  return {lo, hi, bps, values};
}

// Points where a left-continuous step function can differ: every
// breakpoint, just after it, and the domain ends.
std::vector<double> probes(const std::vector<const PiecewiseConstantFn*>& fs) {
  std::vector<double> out{fs[0]->lo(), fs[0]->hi()};
  for (const auto* f : fs) {
    for (double b : f->breakpoints()) {
      out.push_back(b);
      out.push_back(std::nextafter(b, fs[0]->hi()));
    }
  }
  return out;
}

}  // namespace

TEST(Piecewise, ValueAtBreakpointIsTheLeftPiece) {
  const PiecewiseConstantFn f(0.0, 2.0, {1.0}, {0.0, 1.0});
  EXPECT_EQ(f(0.0), 0.0);
  EXPECT_EQ(f(1.0), 0.0);
  EXPECT_EQ(f(std::nextafter(1.0, 2.0)), 1.0);
  EXPECT_EQ(f(2.0), 1.0);
  EXPECT_EQ(f(-5.0), 0.0);  // clamped
  const auto p = f.pieces();
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].right, 1.0);
  EXPECT_EQ(p[1].left, 1.0);
}

TEST(Piecewise, RejectsMalformedInput) {
  EXPECT_THROW(PiecewiseConstantFn(0, 1, {0.5}, {1.0}), std::invalid_argument);
  EXPECT_THROW(PiecewiseConstantFn(0, 1, {1.0}, {0, 1}), std::invalid_argument);
  EXPECT_THROW(PiecewiseConstantFn(0, 1, {0.6, 0.4}, {0, 1, 2}), std::invalid_argument);
  EXPECT_THROW(PiecewiseConstantFn(1, 0, {}, {0}), std::invalid_argument);
}

TEST(Piecewise, CountingMatchesDirectCount) {
  const std::vector<double> ts{0.5, 1.0, 1.0, -2.0, 3.0, 0.0};
  const auto f = PiecewiseConstantFn::counting(0.0, 2.0, ts, 6.0);
  const auto g = PiecewiseConstantFn::counting(0.0, 2.0, ts, 6.0, true);
  for (double tau : {0.0, 0.25, 0.5, 0.5000001, 1.0, 1.0000001, 1.5, 2.0}) {
    const double count = static_cast<double>(std::count_if(ts.begin(), ts.end(), [&](double t) { return t < tau; }));
    EXPECT_EQ(f(tau), count / 6.0) << tau;
    EXPECT_EQ(g(tau), (6.0 - count) / 6.0) << tau;
  }
}

TEST(Piecewise, CombineAgreesWithPointwiseEvaluation) {
  Rng rng = make_rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_fn(rng, -1.0, 3.0, 6);
    const auto b = random_fn(rng, -1.0, 3.0, 6);
    const auto op = [](double u, double v) { return u + 2.0 * v; };
    const auto c = PiecewiseConstantFn::combine(a, b, op);
    for (double tau : probes({&a, &b})) EXPECT_EQ(c(tau), op(a(tau), b(tau))) << trial << " " << tau;
    for (std::size_t i = 1; i < c.values().size(); ++i) EXPECT_NE(c.values()[i], c.values()[i - 1]);
    const auto s = a + b;
    const auto m = 3.0 * a;
    for (double tau : probes({&a, &b})) {
      EXPECT_EQ(s(tau), a(tau) + b(tau));
      EXPECT_EQ(m(tau), 3.0 * a(tau));
    }
  }
  EXPECT_THROW(PiecewiseConstantFn::combine(PiecewiseConstantFn::constant(0, 1, 0), PiecewiseConstantFn::constant(0, 2, 0),
                                            [](double u, double) { return u; }),
               std::invalid_argument);
}

TEST(Piecewise, ExtremaAndArgExtrema) {
  const PiecewiseConstantFn f(0.0, 4.0, {1.0, 2.0, 3.0}, {0.5, 2.0, -1.0, 2.0});
  EXPECT_EQ(f.max_value(), 2.0);
  EXPECT_EQ(f(f.argmax()), 2.0);
  EXPECT_EQ(f.argmax(), 2.0);
  EXPECT_EQ(f.min_value(), -1.0);
  EXPECT_EQ(f(f.argmin()), -1.0);
}

TEST(Piecewise, RestrictionKeepsValues) {
  Rng rng = make_rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_fn(rng, 0.0, 10.0, 8);
    const auto r = f.restricted(2.5, 7.5);
    EXPECT_EQ(r.lo(), 2.5);
    EXPECT_EQ(r.hi(), 7.5);
    for (double tau : probes({&f}))
      if (tau >= 2.5 && tau <= 7.5) EXPECT_EQ(r(tau), f(tau));
  }
  EXPECT_THROW(PiecewiseConstantFn::constant(0, 1, 0).restricted(-1, 1), std::invalid_argument);
}

TEST(Piecewise, CoalesceMergesOnlyEqualNeighbors) {
  PiecewiseConstantFn f(0.0, 4.0, {1.0, 2.0, 3.0}, {1.0, 1.0, 0.5, 0.5});
  f.coalesce();
  EXPECT_EQ(f.breakpoints(), std::vector<double>{2.0});
  EXPECT_EQ(f.values(), (std::vector<double>{1.0, 0.5}));
}
