#include <gtest/gtest.h>

#include <cmath>

#include "spfom/sim.hpp"

using namespace spfom;

namespace {

SimConfig small_config() {
  SimConfig cfg = market_config();
  cfg.batches = 6;
  cfg.customers_per_batch = 60;
  cfg.products = 8;
  cfg.segments = 3;
  cfg.runs = 2;
  cfg.inventory = {1.0, 40.0};
  cfg.seed = 5;
  return cfg;
}

SimTrace from_histogram(std::vector<double> h) {
  SimTrace t;
  t.sales_histogram = std::move(h);
  return t;
}

}  // namespace

TEST(Market, DeterministicAndWellFormed) {
  const auto cfg = small_config();
  const auto a = generate_market(cfg, 1);
  const auto b = generate_market(cfg, 1);
  EXPECT_EQ(a.periods.size(), cfg.batches);
  EXPECT_TRUE(validate(a).ok());
  EXPECT_EQ(a.initial_capacities, b.initial_capacities);
  for (double c : a.initial_capacities) EXPECT_EQ(c, std::round(c));
  EXPECT_NE(generate_market(cfg, 2).initial_capacities, a.initial_capacities);
}

TEST(Policy, AmpleInventoryRecommendsEverything) {
  auto cfg = small_config();
  cfg.products = 3;
  cfg.rec_limit = 5;
  cfg.inventory = {1e6, 2e6};
  const auto mp = generate_market(cfg, 0);
  const auto trace = run_go_policy(mp, cfg, 0);
  for (const auto& b : trace.batches) {
    for (const auto& s : b.segments) EXPECT_FALSE(s.solved);
    for (auto shown : b.shown) EXPECT_EQ(shown, cfg.customers_per_batch);
  }
  EXPECT_TRUE(mean_opportunity_cost(trace).empty);
}

TEST(Policy, InactivePolicyEqualsPlainChoiceSimulation) {
  auto cfg = small_config();
  cfg.products = 3;
  cfg.rec_limit = 3;
  cfg.inventory = {1e6, 2e6};
  const auto mp = generate_market(cfg, 0);
  const auto trace = run_go_policy(mp, cfg, 0);
  Rng rng(cfg.seed, Stream::kChoice, 0);
  double revenue = 0.0;
  for (const auto& p : mp.periods) {
    for (std::size_t i = 0; i < p.n; ++i) {
      const auto c = sample_choice(p, i, Assortment::all(p.m), rng);
      if (c != kNoPurchase) revenue += p.prices[c];
    }
  }
  EXPECT_NEAR(trace.cumulative_revenue, revenue, 1e-12 * revenue);
}

TEST(Policy, SingleSegmentMsdIsGo) {
  auto cfg = small_config();
  cfg.segments = 1;
  const auto mp = generate_market(cfg, 0);
  const auto go = run_go_policy(mp, cfg, 0);
  const auto msd = run_msd_policy(mp, cfg, 0);
  EXPECT_EQ(go.cumulative_revenue, msd.cumulative_revenue);
  EXPECT_EQ(go.sales_histogram, msd.sales_histogram);
  for (std::size_t t = 0; t < go.batches.size(); ++t) {
    EXPECT_EQ(go.batches[t].inventory, msd.batches[t].inventory);
    EXPECT_EQ(go.batches[t].segments[0].eta, msd.batches[t].segments[0].eta);
  }
}

TEST(Policy, TraceInvariants) {
  const auto cfg = small_config();
  const auto mp = generate_market(cfg, 0);
  for (const auto& trace : {run_go_policy(mp, cfg, 0), run_msd_policy(mp, cfg, 0)}) {
    std::vector<double> before = mp.initial_capacities;
    double revenue = 0.0;
    for (const auto& b : trace.batches) {
      for (std::size_t j = 0; j < before.size(); ++j) {
        EXPECT_GE(b.inventory[j], 0.0);
        EXPECT_LE(b.sold[j], before[j]);
        EXPECT_EQ(b.inventory[j], before[j] - b.sold[j]);
      }
      before = b.inventory;
      revenue += b.revenue;
    }
    EXPECT_NEAR(trace.cumulative_revenue, revenue, 1e-8);
    double by_product = 0.0;
    for (std::size_t j = 0; j < trace.prices.size(); ++j) by_product += trace.prices[j] * trace.sales_histogram[j];
    EXPECT_NEAR(trace.cumulative_revenue, by_product, 1e-8);
    for (const auto& b : trace.batches) {
      for (const auto& s : b.segments) {
        for (double e : s.eta) EXPECT_GE(e, 0.0);
      }
    }
  }
}

TEST(Policy, Deterministic) {
  const auto cfg = small_config();
  const auto mp = generate_market(cfg, 0);
  const auto a = run_msd_policy(mp, cfg, 0);
  const auto b = run_msd_policy(mp, cfg, 0);
  EXPECT_EQ(a.cumulative_revenue, b.cumulative_revenue);
  EXPECT_EQ(a.inventory_curve(), b.inventory_curve());
}

TEST(Policy, ScarceGoHasPositiveOpportunityCost) {
  auto cfg = small_config();
  cfg.inventory = {1.0, 6.0};
  const auto mp = generate_market(cfg, 0);
  const auto oc = mean_opportunity_cost(run_go_policy(mp, cfg, 0));
  EXPECT_FALSE(oc.empty);
  EXPECT_GT(oc.value, 0.0);
}

TEST(Policy, HorizonVariantsRun) {
  auto cfg = small_config();
  const auto mp = generate_market(cfg, 0);
  for (auto h : {PlanningHorizon::kProrated, PlanningHorizon::kStacked}) {
    cfg.horizon = h;
    const auto t = run_go_policy(mp, cfg, 0);
    EXPECT_EQ(t.batches.size(), cfg.batches);
  }
}

TEST(Recommend, RankingAndEligibility) {
  Instance p;
  p.n = 1;
  p.m = 4;
  p.prices = {10, 8, 6, 4};
  p.capacities = {1, 1, 1, 1};
  p.lambdas = {1};
  p.w0 = {1};
  p.weights = WeightMatrix::dense(1, 4, {0.1, 0.5, 0.9, 0.0});
  SimConfig cfg;
  cfg.rec_limit = 2;
  const std::vector<std::uint32_t> all{0, 1, 2, 3};
  const std::vector<double> eta{0, 0, 7, 0};
  // Scores: 1.0, 4.0, product 2 ineligible (margin -1), product 3 zero weight.
  EXPECT_EQ(detail::recommend(p, 0, cfg, all, eta, true), (std::vector<std::size_t>{0, 1}));
  cfg.rank_by_weighted_margin = false;
  EXPECT_EQ(detail::recommend(p, 0, cfg, all, std::vector<double>{0, 0, 0, 0}, true),
            (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(detail::recommend(p, 0, cfg, all, eta, false), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(sales_entropy(from_histogram({5, 5, 5, 5})).value, 2.0, 1e-15);
  EXPECT_EQ(sales_entropy(from_histogram({0, 9, 0})).value, 0.0);
  EXPECT_NEAR(sales_entropy(from_histogram({2, 1, 1})).value, 1.5, 1e-15);
  const auto none = sales_entropy(from_histogram({0, 0}));
  EXPECT_TRUE(none.empty);
  EXPECT_EQ(none.value, 0.0);
}

TEST(Crossing, FirstStrictDrop) {
  SimTrace a, b;
  auto record = [](double left) {
    BatchRecord r;
    r.inventory = {left};
    return r;
  };
  for (double x : {10.0, 8.0, 6.0}) a.batches.push_back(record(x));
  for (double x : {10.0, 8.0, 5.0}) b.batches.push_back(record(x));
  EXPECT_EQ(first_inventory_crossing(a, b), std::optional<std::size_t>(2));
  EXPECT_EQ(first_inventory_crossing(b, a), std::nullopt);
}

TEST(Stats, StudentQuantiles) {
  EXPECT_NEAR(student_t_quantile(0.975, 29), 2.045230, 1e-3);
  EXPECT_NEAR(student_t_quantile(0.95, 29), 1.699127, 1e-3);
  EXPECT_NEAR(student_t_quantile(0.95, 4), 2.131847, 2e-3);
  EXPECT_NEAR(student_t_quantile(0.05, 10), -1.812461, 1e-3);
  EXPECT_THROW(student_t_quantile(1.0, 3), UsageError);
}

TEST(Stats, SummaryAndPairedTest) {
  const auto s = summarize({1, 2, 3, 4, 5});
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_NEAR(s.stddev, std::sqrt(2.5), 1e-15);
  EXPECT_NEAR(s.ci95, 2.776445 * std::sqrt(2.5) / std::sqrt(5.0), 1e-2);
  const auto yes = paired_greater({3, 4, 5, 6}, {1, 2.5, 3, 4.2});
  EXPECT_TRUE(yes.reject);
  const auto no = paired_greater({1, 2, 3, 4}, {1.1, 1.9, 3.2, 3.9});
  EXPECT_FALSE(no.reject);
  EXPECT_THROW(paired_greater({1}, {2}), UsageError);
}
