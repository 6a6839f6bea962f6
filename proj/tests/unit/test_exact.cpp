#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "dfemd/emd.hpp"
#include "dfemd/error.hpp"
#include "oracle_data.hpp"
#include "test_support.hpp"

namespace dfemd {
namespace {

WeightedFeatureSet from_floats(const std::vector<float>& values, int n, int c,
                               const std::vector<double>& weights) {
  WeightedFeatureSet s;
  s.patches = Matrix(n, c);
  for (std::size_t i = 0; i < values.size(); ++i) s.patches.data()[i] = values[i];
  s.weights = weights;
  return s;
}

// Primal feasibility, dual feasibility, equal objectives and complementary
// slackness together prove optimality independently of the solver.
void expect_certified(const std::vector<double>& a, const std::vector<double>& b,
                      const Matrix& d, const TransportPlan& p) {
  const std::size_t n = a.size(), m = b.size();
  ASSERT_EQ(p.row_potential.size(), n);
  ASSERT_EQ(p.col_potential.size(), m);
  double primal = 0.0, dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double f = p.flow(i, j);
      EXPECT_GE(f, 0.0);
      row += f;
      primal += f * d(i, j);
      const double reduced = d(i, j) - p.row_potential[i] - p.col_potential[j];
      EXPECT_GE(reduced, -1e-12);
      if (f > 1e-14) EXPECT_NEAR(reduced, 0.0, 1e-12);
    }
    EXPECT_NEAR(row, a[i], 1e-12);
    dual += a[i] * p.row_potential[i];
  }
  for (std::size_t j = 0; j < m; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += p.flow(i, j);
    EXPECT_NEAR(col, b[j], 1e-12);
    dual += b[j] * p.col_potential[j];
  }
  EXPECT_NEAR(primal, p.cost, 1e-12);
  EXPECT_NEAR(dual, p.cost, 1e-12);
}

TEST(ExactEmd, SinglePatch) {
  WeightedFeatureSet q{Matrix(1, 2), {1.0}}, g{Matrix(1, 2), {1.0}};
  q.patches(0, 0) = 1;
  g.patches(0, 0) = 1;
  g.patches(0, 1) = 1;
  const TransportPlan p = exact_emd(q, g);
  EXPECT_EQ(p.flow(0, 0), 1.0);
  EXPECT_NEAR(p.cost, 1.0 - std::sqrt(0.5), 1e-15);
  EXPECT_TRUE(p.converged);
}

TEST(ExactEmd, PermutationStructuredCostIsZero) {
  const std::size_t n = 5;
  const std::size_t perm[] = {3, 0, 4, 1, 2};
  Matrix d(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) d(i, perm[i]) = 0.0;
  const std::vector<double> w(n, 0.2);
  const TransportPlan p = exact_transport(w, w, d);
  EXPECT_EQ(p.cost, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(p.flow(i, j), j == perm[i] ? 0.2 : 0.0, 1e-15);
}

TEST(ExactEmd, MatchesLinearProgrammingOracle) {
  for (const auto& c : oracle::emd_cases()) {
    const auto q = from_floats(c.q, c.n, c.c, c.wq);
    const auto g = from_floats(c.g, c.n, c.c, c.wg);
    const TransportPlan p = exact_emd(q, g);
    EXPECT_NEAR(p.cost, c.cost, 1e-9) << "n=" << c.n;
    expect_certified(q.weights, g.weights, ground_distance(q.patches, g.patches), p);
  }
}

TEST(ExactEmd, DualCertificateOnRandomInstances) {
  synth::Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.index(16);
    const std::size_t m = 1 + rng.index(16);
    std::vector<double> a(n), b(m);
    for (double& x : a) x = rng.uniform(0.0, 1.0);
    for (double& x : b) x = rng.uniform(0.0, 1.0);
    if (trial % 4 == 0) a[0] = 0.0;  // zero-mass row
    a = normalize_weights(a);
    b = normalize_weights(b);
    Matrix d(n, m);
    for (double& x : d.data()) x = trial % 3 == 0 ? static_cast<double>(rng.index(3)) : rng.uniform(0.0, 2.0);
    expect_certified(a, b, d, exact_transport(a, b, d));
  }
}

TEST(ExactEmd, UniformWeightsMatchBestAssignment) {
  synth::Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(6);
    const auto q = testing::random_set(rng, n, 4);
    const auto g = testing::random_set(rng, n, 4);
    const Matrix d = ground_distance(q.patches, g.patches);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += d(i, perm[i]);
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto uq = testing::uniform_set(q.patches);
    const auto ug = testing::uniform_set(g.patches);
    EXPECT_NEAR(exact_emd(uq, ug, d).cost, best / static_cast<double>(n), 1e-12);
  }
}

TEST(ExactEmd, ShiftingCostsByConstantShiftsOptimum) {
  synth::Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(7);
    const auto q = testing::random_set(rng, n, 5);
    const auto g = testing::random_set(rng, n, 5);
    Matrix d = ground_distance(q.patches, g.patches);
    const double base = exact_emd(q, g, d).cost;
    const double c = rng.uniform(0.01, 3.0);
    for (double& x : d.data()) x += c;
    EXPECT_NEAR(exact_emd(q, g, d).cost, base + c, 1e-12);
  }
}

TEST(ExactEmd, BoundedByLargestGroundDistance) {
  synth::Rng rng(34);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(10);
    const auto q = testing::random_set(rng, n, 3);
    const auto g = testing::random_set(rng, n, 3);
    const Matrix d = ground_distance(q.patches, g.patches);
    const double cost = exact_emd(q, g, d).cost;
    EXPECT_GE(cost, 0.0);
    EXPECT_LE(cost, *std::max_element(d.data().begin(), d.data().end()) + 1e-15);
  }
}

TEST(ExactEmd, IdenticalSetsCostZero) {
  synth::Rng rng(35);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = testing::random_set(rng, 1 + rng.index(12), 6);
    EXPECT_NEAR(exact_emd(q, q).cost, 0.0, 1e-15);
  }
}

TEST(ExactEmd, SizeLimit) {
  const std::vector<double> a(17, 1.0 / 17);
  EXPECT_THROW(exact_transport(a, a, Matrix(17, 17, 1.0)), UsageError);
  const std::vector<double> b(16, 1.0 / 16);
  EXPECT_NO_THROW(exact_transport(b, b, Matrix(16, 16, 1.0)));
}

TEST(ExactEmd, RejectsUnbalancedWeights) {
  const std::vector<double> a = {0.5, 0.6};
  const std::vector<double> b = {0.5, 0.5};
  EXPECT_THROW(exact_transport(a, b, Matrix(2, 2, 1.0)), NumericalError);
}

TEST(NormalizeFlow, MinMaxRows) {
  TransportPlan p;
  p.flow = Matrix(2, 3);
  p.flow(0, 0) = 0.2;
  p.flow(0, 1) = 0.4;
  p.flow(0, 2) = 0.6;
  p.flow(1, 0) = p.flow(1, 1) = p.flow(1, 2) = 0.1;
  const auto r0 = normalize_flow(p, 0);
  EXPECT_NEAR(r0[0], 0.0, 1e-15);
  EXPECT_NEAR(r0[1], 0.5, 1e-15);
  EXPECT_NEAR(r0[2], 1.0, 1e-15);
  EXPECT_EQ(normalize_flow(p, 1), (std::vector<double>{0, 0, 0}));
  EXPECT_THROW(normalize_flow(p, 2), UsageError);
}

TEST(NormalizeFlow, SolvedPlanRowsMatchFormula) {
  synth::Rng rng(36);
  const auto q = testing::random_set(rng, 4, 5);
  const auto g = testing::random_set(rng, 4, 5);
  for (const TransportPlan& p : {exact_emd(q, g), solve_emd(q, g, SinkhornConfig{})}) {
    for (std::size_t i = 0; i < 4; ++i) {
      const auto row = p.flow.row(i);
      double lo = row[0], hi = row[0];
      for (double f : row) lo = std::min(lo, f), hi = std::max(hi, f);
      const auto got = normalize_flow(p, i);
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_GE(got[j], 0.0);
        EXPECT_LE(got[j], 1.0);
        EXPECT_DOUBLE_EQ(got[j], hi > lo ? (row[j] - lo) / (hi - lo) : 0.0);
      }
    }
  }
}

TEST(FlowArgmax, SelfPairIsDiagonal) {
  synth::Rng rng(37);
  const auto q = testing::random_set(rng, 9, 8);
  const auto p = exact_emd(q, q);
  const auto am = flow_argmax(p);
  for (std::size_t i = 0; i < am.size(); ++i) EXPECT_EQ(am[i], i);
}

}  // namespace
}  // namespace dfemd
