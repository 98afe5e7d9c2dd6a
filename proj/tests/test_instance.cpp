#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "spfom/instance.hpp"
#include "spfom/reference.hpp"
#include "spfom/rng.hpp"
#include "support.hpp"

using namespace spfom;
using spfom::testing::Gen;
using spfom::testing::make_instance;

namespace {

bool has_violation(const ValidationReport& rep, const std::string& text) {
  return std::any_of(rep.violations.begin(), rep.violations.end(),
                     [&](const std::string& v) { return v.find(text) != std::string::npos; });
}

}  // namespace

TEST(Generate, DrawsStayInsideRanges) {
  GenerationConfig cfg;
  cfg.capacity = {0.4, 0.6};
  cfg.price = {0.4, 0.6};
  cfg.weight = {0.4, 0.6};
  const auto inst = generate_uniform(1, 1, 0, cfg);
  for (double v : {inst.capacities[0], inst.prices[0], inst.w0[0], inst.weights.at(0, 0)}) {
    EXPECT_GT(v, 0.4);
    EXPECT_LT(v, 0.6);
  }
  EXPECT_EQ(inst.lambdas[0], 1.0);
}

TEST(Generate, IsAPureFunctionOfItsArguments) {
  const auto a = generate_uniform(50, 7, 11);
  const auto b = generate_uniform(50, 7, 11);
  const auto c = generate_uniform(50, 7, 12);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.prices, c.prices);
  EXPECT_TRUE(validate(a).ok());
}

TEST(Generate, RejectsBadRanges) {
  GenerationConfig cfg;
  cfg.capacity = {0.5, 0.5};
  EXPECT_THROW(generate_uniform(2, 2, 0, cfg), ConfigError);
  cfg.capacity = {-1.0, 1.0};
  EXPECT_THROW(generate_uniform(2, 2, 0, cfg), ConfigError);
  EXPECT_THROW(generate_uniform(0, 2, 0), ConfigError);
}

TEST(Generate, SeparateNoPurchaseRange) {
  GenerationConfig cfg;
  cfg.no_purchase_weight = Range{5.0, 6.0};
  const auto inst = generate_uniform(30, 3, 4, cfg);
  for (double w0 : inst.w0) {
    EXPECT_GT(w0, 5.0);
    EXPECT_LT(w0, 6.0);
  }
}

TEST(Validate, GeneratedInstanceIsOk) { EXPECT_TRUE(validate(generate_uniform(20, 5, 3)).ok()); }

TEST(Validate, ZeroCapacityNamed) {
  auto inst = generate_uniform(4, 5, 3);
  inst.capacities[3] = 0.0;
  const auto rep = validate(inst);
  ASSERT_FALSE(rep.ok());
  EXPECT_TRUE(has_violation(rep, "capacity[3] must be > 0"));
  EXPECT_THROW(require_valid(inst), DomainError);
}

TEST(Validate, InertCustomerNamed) {
  auto inst = make_instance({1, 1}, {1, 1}, {1, 1}, {{0.5, 0.5}, {0.0, 0.0}});
  const auto rep = validate(inst);
  ASSERT_FALSE(rep.ok());
  EXPECT_TRUE(has_violation(rep, "customer 1"));
}

TEST(Validate, ShapeAndSignErrors) {
  auto inst = generate_uniform(3, 2, 0);
  inst.prices.push_back(1.0);
  EXPECT_TRUE(has_violation(validate(inst), "prices has length 3"));
  inst = generate_uniform(3, 2, 0);
  inst.lambdas[1] = 0.0;
  inst.w0[2] = -1.0;
  const auto rep = validate(inst);
  EXPECT_TRUE(has_violation(rep, "lambda[1]"));
  EXPECT_TRUE(has_violation(rep, "w0[2]"));
}

TEST(WeightMatrix, SparseAndDenseAgree) {
  const auto dense = WeightMatrix::dense(2, 3, {0.0, 1.5, 2.0, 3.0, 0.0, 0.0});
  const auto sparse = WeightMatrix::sparse(2, 3, {{{1, 1.5}, {2, 2.0}}, {{0, 3.0}}});
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(dense.dense_row(i), sparse.dense_row(i));
    EXPECT_DOUBLE_EQ(dense.row_sum(i), sparse.row_sum(i));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(dense.at(i, j), sparse.at(i, j));
  }
  std::vector<std::size_t> seen;
  sparse.for_each_nonzero(0, [&](std::size_t j, double) { seen.push_back(j); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2}));
}

TEST(WeightMatrix, UnsortedSparseRowIsAViolation) {
  auto inst = make_instance({1, 1}, {1, 1}, {1}, {{1, 1}});
  inst.weights = WeightMatrix::sparse(1, 2, {{{1, 1.0}, {0, 1.0}}});
  EXPECT_TRUE(has_violation(validate(inst), "sorted"));
  inst.weights = WeightMatrix::sparse(1, 2, {{{4, 1.0}}});
  EXPECT_TRUE(has_violation(validate(inst), ">= m"));
}

TEST(StackPeriods, SinglePeriodTakesInitialCapacities) {
  MultiPeriodInstance mp;
  mp.periods.push_back(generate_uniform(4, 3, 1));
  mp.initial_capacities = {5.0, 6.0, 7.0};
  auto expect = mp.periods[0];
  expect.capacities = mp.initial_capacities;
  EXPECT_EQ(stack_periods(mp), expect);
}

TEST(StackPeriods, ConcatenatesInPeriodOrder) {
  MultiPeriodInstance mp;
  mp.periods.push_back(generate_uniform(3, 2, 1));
  auto second = generate_uniform(3, 2, 2);
  second.prices = mp.periods[0].prices;
  mp.periods.push_back(second);
  mp.initial_capacities = {1.0, 2.0};
  const auto s = stack_periods(mp);
  ASSERT_EQ(s.n, 6u);
  EXPECT_EQ(s.capacities, mp.initial_capacities);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s.weights.dense_row(i), mp.periods[0].weights.dense_row(i));
    EXPECT_EQ(s.weights.dense_row(i + 3), mp.periods[1].weights.dense_row(i));
    EXPECT_EQ(s.w0[i + 3], mp.periods[1].w0[i]);
  }
}

TEST(StackPeriods, RejectsDisagreeingPrices) {
  MultiPeriodInstance mp;
  mp.periods.push_back(generate_uniform(3, 2, 1));
  mp.periods.push_back(generate_uniform(3, 2, 2));
  mp.initial_capacities = {1.0, 2.0};
  EXPECT_THROW(stack_periods(mp), StructuralError);
  EXPECT_FALSE(validate(mp).ok());
}

// Multi-period LP built directly: one y block per period, one shared
// capacity row per product.
TEST(StackPeriods, StackedOptimumEqualsMultiPeriodLp) {
  Gen g(5);
  MultiPeriodInstance mp;
  mp.periods.push_back(spfom::testing::random_instance(g, {.n = 2, .m = 2}));
  auto p2 = spfom::testing::random_instance(g, {.n = 2, .m = 2});
  p2.prices = mp.periods[0].prices;
  mp.periods.push_back(p2);
  mp.initial_capacities = {0.3, 0.4};

  const std::size_t m = 2, per = m + 1;
  const std::size_t ycols = 4 * per;
  const std::size_t rows = m + 4 + 4 * m;
  reference::StandardFormLP lp(rows, ycols + m + 4 * m);
  std::size_t cust = 0;
  for (const auto& p : mp.periods) {
    for (std::size_t i = 0; i < p.n; ++i, ++cust) {
      const std::size_t base = cust * per;
      lp.at(m + cust, base) = 1.0;
      for (std::size_t j = 0; j < m; ++j) {
        lp.at(j, base + 1 + j) = 1.0;
        lp.at(m + cust, base + 1 + j) = 1.0;
        lp.cost[base + 1 + j] = p.prices[j];
        const std::size_t r = m + 4 + cust * m + j;
        lp.at(r, base + 1 + j) = 1.0;
        lp.at(r, base) = -p.weights.at(i, j) / p.w0[i];
        lp.at(r, ycols + m + cust * m + j) = 1.0;
        lp.slack_of_row[r] = ycols + m + cust * m + j;
      }
      lp.rhs[m + cust] = p.lambdas[i];
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    lp.at(j, ycols + j) = 1.0;
    lp.rhs[j] = mp.initial_capacities[j];
    lp.slack_of_row[j] = ycols + j;
  }
  const auto direct = reference::solve_lp(lp);
  ASSERT_EQ(direct.status, reference::LpStatus::kOptimal);
  EXPECT_NEAR(reference::simplex_solve_sblp(stack_periods(mp)).objective, direct.objective, 1e-9);
}

TEST(SelectCustomers, KeepsRowsInGivenOrder) {
  const auto inst = generate_uniform(5, 3, 9);
  const std::vector<std::size_t> ids{4, 1};
  const auto sub = select_customers(inst, ids, {1.0, 1.0, 1.0});
  ASSERT_EQ(sub.n, 2u);
  EXPECT_EQ(sub.weights.dense_row(0), inst.weights.dense_row(4));
  EXPECT_EQ(sub.w0[1], inst.w0[1]);
}

TEST(IdentityBundle, IsValid) {
  const auto b = identity_bundle(generate_uniform(3, 4, 0));
  EXPECT_TRUE(validate(b).ok());
  EXPECT_EQ(b.at(2, 2), 1);
  EXPECT_EQ(b.at(2, 1), 0);
}

TEST(Rng, StreamsAreIndependentAndReproducible) {
  Rng a(7, Stream::kInstance), b(7, Stream::kInstance), c(7, Stream::kChoice);
  std::set<double> seen;
  for (int k = 0; k < 100; ++k) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_NE(derive_seed(7, Stream::kInstance), derive_seed(7, Stream::kChoice));
  EXPECT_NE(derive_seed(7, Stream::kChoice, 0), derive_seed(7, Stream::kChoice, 1));
  Rng d(7, Stream::kInstance);
  EXPECT_NE(c.uniform(), d.uniform());
}
