#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "spfom/inner.hpp"
#include "spfom/reference.hpp"
#include "support.hpp"

using namespace spfom;
using spfom::testing::Gen;
using spfom::testing::make_instance;

namespace {

DualPrices zero_duals(std::size_t m) { return DualPrices{std::vector<double>(m, 0.0)}; }

std::vector<double> coefficients(const Instance& inst, const DualPrices& d) {
  std::vector<double> c(inst.m);
  for (std::size_t j = 0; j < inst.m; ++j) c[j] = inst.prices[j] - d.eta[j];
  return c;
}

DualPrices random_duals(Gen& g, const Instance& inst) {
  DualPrices d;
  for (std::size_t j = 0; j < inst.m; ++j) d.eta.push_back(g.coin(0.3) ? 0.0 : g.uniform(0.0, 2.5));
  return d;
}

}  // namespace

TEST(NoPurchaseBound, Examples) {
  EXPECT_DOUBLE_EQ(feasible_nopurchase_bound(make_instance({1}, {1}, {1}, {{1}}), 0), 0.5);
  EXPECT_DOUBLE_EQ(feasible_nopurchase_bound(make_instance({1, 1}, {1, 1}, {1}, {{1, 1}}), 0), 1.0 / 3.0);
  EXPECT_NEAR(feasible_nopurchase_bound(make_instance({1}, {1}, {1}, {{1e-12}}), 0), 1.0, 1e-11);
  EXPECT_DOUBLE_EQ(feasible_nopurchase_bound(make_instance({1}, {1}, {1}, {{1}}, {4.0}), 0), 2.0);
}

TEST(FastInner, TwoCapsThenRemainder) {
  const auto inst = make_instance({2, 1}, {1, 1}, {1}, {{1, 1}});
  const auto s = fast_inner(inst, 0, 0.4, zero_duals(2));
  ASSERT_EQ(s.y_row.size(), 3u);
  EXPECT_NEAR(s.y_row[0], 0.4, 1e-15);
  EXPECT_NEAR(s.y_row[1], 0.4, 1e-15);
  EXPECT_NEAR(s.y_row[2], 0.2, 1e-15);
  EXPECT_NEAR(s.value, 1.0, 1e-15);
}

TEST(FastInner, ZeroBudget) {
  const auto inst = make_instance({2, 1}, {1, 1}, {1}, {{1, 1}});
  const auto s = fast_inner(inst, 0, 1.0, zero_duals(2));
  EXPECT_EQ(s.y_row, (std::vector<double>{1.0, 0.0, 0.0}));
  EXPECT_EQ(s.value, 0.0);
}

TEST(FastInner, FillsHigherCoefficientFirst) {
  const auto inst = make_instance({1, 3}, {1, 1}, {1}, {{2, 1}});
  const auto s = fast_inner(inst, 0, 0.5, zero_duals(2));
  EXPECT_NEAR(s.y_row[1], 0.0, 1e-15);
  EXPECT_NEAR(s.y_row[2], 0.5, 1e-15);
  EXPECT_NEAR(s.value, 1.5, 1e-15);
}

TEST(FastInner, DualsShiftTheOrder) {
  const auto inst = make_instance({2, 1}, {1, 1}, {1}, {{1, 1}});
  const auto s = fast_inner(inst, 0, 0.4, DualPrices{{1.5, 0.0}});
  EXPECT_NEAR(s.y_row[2], 0.4, 1e-15);
  EXPECT_NEAR(s.y_row[1], 0.2, 1e-15);
  EXPECT_NEAR(s.value, 0.4 * 1.0 + 0.2 * 0.5, 1e-15);
}

TEST(FastInner, InfeasibleLevelRejected) {
  const auto inst = make_instance({1}, {1}, {1}, {{1}});
  EXPECT_THROW(fast_inner(inst, 0, 0.3, zero_duals(1)), Error);
  EXPECT_THROW(fast_inner(inst, 0, 1.5, zero_duals(1)), Error);
  EXPECT_THROW(fast_inner(inst, 2, 0.6, zero_duals(1)), UsageError);
}

TEST(FastInner, ZeroWeightProductNeverSells) {
  const auto inst = make_instance({5, 1}, {1, 1}, {1}, {{0, 1}});
  const auto s = fast_inner(inst, 0, 0.5, zero_duals(2));
  EXPECT_EQ(s.y_row[1], 0.0);
  EXPECT_NEAR(s.y_row[2], 0.5, 1e-15);
}

TEST(FastInner, MatchesSimplexOracle) {
  Gen g(17);
  for (int trial = 0; trial < 400; ++trial) {
    const auto inst = spfom::testing::random_instance(
        g, {.n = 1, .m = g.index(1, 8), .zero_weight_prob = 0.15, .random_lambda = true});
    const auto d = random_duals(g, inst);
    const double lo = feasible_nopurchase_bound(inst, 0);
    const double y0 = g.coin(0.1) ? lo : g.uniform(lo, inst.lambdas[0]);
    const auto fast = fast_inner(inst, 0, y0, d);
    const auto slow = reference::inner_bruteforce(inst, 0, y0, d);
    EXPECT_NEAR(fast.value, slow.value, 1e-9);
  }
}

TEST(FastInner, GreedyStructureAndBudget) {
  Gen g(23);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = spfom::testing::random_instance(g, {.n = 1, .m = g.index(1, 8), .random_lambda = true});
    const auto d = random_duals(g, inst);
    const double lo = feasible_nopurchase_bound(inst, 0);
    const double y0 = g.uniform(lo, inst.lambdas[0]);
    const auto s = fast_inner(inst, 0, y0, d);
    const auto c = coefficients(inst, d);
    double sold = 0.0;
    for (std::size_t j = 0; j < inst.m; ++j) sold += s.y_row[j + 1];
    EXPECT_NEAR(sold, inst.lambdas[0] - y0, 1e-9);
    for (std::size_t j = 0; j < inst.m; ++j) {
      const double cap = inst.weights.at(0, j) * y0 / inst.w0[0];
      EXPECT_LE(s.y_row[j + 1], cap + 1e-12);
      for (std::size_t k = 0; k < inst.m; ++k) {
        if (c[j] > c[k] + 1e-12 && s.y_row[k + 1] > 0.0) {
          EXPECT_NEAR(s.y_row[j + 1], cap, 1e-9);
        }
      }
    }
  }
}

TEST(InnerValue, UnimodalOnGrid) {
  Gen g(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = spfom::testing::random_instance(g, {.n = 1, .m = g.index(1, 8), .random_lambda = true});
    const auto d = random_duals(g, inst);
    const auto order = make_coefficient_order(inst, d);
    const auto view = prepare_customer(inst, 0, order);
    const double lo = feasible_nopurchase_bound(view);
    const double hi = inst.lambdas[0];
    std::vector<double> z;
    for (int k = 0; k <= 99; ++k) z.push_back(inner_value(view, lo + (hi - lo) * k / 99.0));
    const auto peak = std::max_element(z.begin(), z.end()) - z.begin();
    for (long k = 1; k <= peak; ++k) EXPECT_GE(z[k], z[k - 1] - 1e-10);
    for (long k = peak + 1; k < 100; ++k) EXPECT_LE(z[k], z[k - 1] + 1e-10);
  }
}

TEST(Golden, PlateauValue) {
  const auto inst = make_instance({2, 1}, {1, 1}, {1}, {{1, 1}});
  const auto s = solve_inner_golden(inst, 0, zero_duals(2));
  EXPECT_NEAR(s.value, 1.0, 1e-6);
  EXPECT_GE(s.y_row[0], 1.0 / 3.0 - 1e-12);
  EXPECT_LE(s.y_row[0], 0.5 + 1e-12);
}

TEST(Golden, NonPositiveCoefficients) {
  const auto inst = make_instance({1, 1}, {1, 1}, {0.7}, {{1, 0.4}});
  const DualPrices d{{1.5, 2.0}};
  const auto s = solve_inner_golden(inst, 0, d);
  const double grid = spfom::testing::grid_inner_optimum({-0.5, -1.0}, {1, 0.4}, 0.7, 1.0, 1e-4);
  EXPECT_GE(s.value, grid - 1e-6);
  EXPECT_LE(s.value, 0.0);
}

TEST(Golden, SingleProductPeak) {
  const auto inst = make_instance({1}, {1}, {1}, {{1}});
  const auto s = solve_inner_golden(inst, 0, zero_duals(1));
  EXPECT_NEAR(s.value, 0.5, 1e-9);
  EXPECT_NEAR(s.y_row[0], 0.5, 1e-3);
}

TEST(Golden, AtLeastGridOracle) {
  Gen g(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = spfom::testing::random_instance(
        g, {.n = 1, .m = g.index(1, 10), .zero_weight_prob = 0.1, .random_lambda = true});
    const auto d = random_duals(g, inst);
    const auto s = solve_inner_golden(inst, 0, d, 1e-3);
    const double grid = spfom::testing::grid_inner_optimum(coefficients(inst, d), inst.weights.dense_row(0),
                                                           inst.w0[0], inst.lambdas[0], 1e-4);
    EXPECT_GE(s.value, grid - 1e-4 * (1.0 + std::abs(s.value)));
  }
}

TEST(Golden, RejectsBadTolerance) {
  const auto inst = make_instance({1}, {1}, {1}, {{1}});
  EXPECT_THROW(solve_inner_golden(inst, 0, zero_duals(1), 0.0), UsageError);
}

TEST(CoefficientOrder, TiesByIndex) {
  const auto o = make_coefficient_order(std::vector<double>{1.0, 2.0, 1.0, 2.0});
  EXPECT_EQ(o.order, (std::vector<std::uint32_t>{1, 3, 0, 2}));
  EXPECT_EQ(o.rank[0], 2u);
}
