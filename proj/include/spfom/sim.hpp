#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spfom/choice.hpp"
#include "spfom/error.hpp"
#include "spfom/inner.hpp"
#include "spfom/instance.hpp"
#include "spfom/rng.hpp"
#include "spfom/solver.hpp"

namespace spfom {

// What inventory a batch solve is allowed to plan against.
enum class PlanningHorizon {
  // Current batch customers against the whole remaining inventory.
  kBatch,
  // Current batch customers against the remaining inventory scaled by the
  // batch's share of the remaining arrivals. Equals the remaining-horizon LP
  // when later batches look like the current one.
  kProrated,
  // Current and all later batches' customers stacked into one LP.
  kStacked,
};

struct SimConfig {
  std::size_t batches = 100;
  std::size_t customers_per_batch = 1000;
  std::size_t products = 40;
  std::size_t rec_limit = 2;
  std::size_t segments = 10;
  std::size_t runs = 30;
  std::uint64_t seed = 0;
  SolverParams solver_params;
  Range price{1.0, 20.0};
  Range inventory{1.0, 2000.0};
  Range weight{0.0, 1.0};
  // Defaults to `weight`.
  std::optional<Range> no_purchase_weight;
  PlanningHorizon horizon = PlanningHorizon::kBatch;
  // Rank eligible products by (r_j - eta_j) * w_ij; false ranks by r_j - eta_j.
  bool rank_by_weighted_margin = true;
  // When > 0, each planning solve runs at most ceil(passes * n / B)
  // iterations (n = customers in that solve) instead of max_iters.
  double solve_passes = 0.0;
};

// Settings used for the 100 x 1000 customer, 40 product market.
inline SimConfig market_config() {
  SimConfig cfg;
  cfg.solver_params.tau = 0.01;
  cfg.solver_params.mu = 0.5;
  cfg.solver_params.batch_size = 20;
  cfg.solver_params.stagnation_window = 100;
  cfg.solve_passes = 10.0;
  // Attractive outside option: customers, not inventory, are the binding
  // side for most products.
  cfg.no_purchase_weight = Range{0.0, 10.0};
  return cfg;
}

inline void validate_config(const SimConfig& cfg) {
  if (cfg.batches < 1) throw ConfigError("batches must be >= 1");
  if (cfg.customers_per_batch < 1) throw ConfigError("customers_per_batch must be >= 1");
  if (cfg.products < 1) throw ConfigError("products must be >= 1");
  if (cfg.rec_limit < 1) throw ConfigError("rec_limit must be >= 1");
  if (cfg.segments < 1) throw ConfigError("segments must be >= 1");
  if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
}

// Synthetic market for replication `run`: shared prices and integer initial
// inventories, then i.i.d. customers per batch.
inline MultiPeriodInstance generate_market(const SimConfig& cfg, std::size_t run) {
  validate_config(cfg);
  check_range(cfg.price, "price");
  check_range(cfg.inventory, "inventory");
  check_range(cfg.weight, "weight");
  const Range w0_range = cfg.no_purchase_weight.value_or(cfg.weight);
  check_range(w0_range, "no-purchase weight");
  Rng rng(cfg.seed, Stream::kSimMarket, run);
  const std::size_t m = cfg.products;
  MultiPeriodInstance mp;
  std::vector<double> prices(m);
  for (auto& r : prices) r = rng.uniform(cfg.price.lo, cfg.price.hi);
  mp.initial_capacities.resize(m);
  for (auto& c : mp.initial_capacities) {
    c = std::max(1.0, std::round(rng.uniform(cfg.inventory.lo, cfg.inventory.hi)));
  }
  mp.periods.reserve(cfg.batches);
  for (std::size_t t = 0; t < cfg.batches; ++t) {
    Instance p;
    p.n = cfg.customers_per_batch;
    p.m = m;
    p.prices = prices;
    p.capacities = mp.initial_capacities;
    p.lambdas.assign(p.n, 1.0);
    p.w0.resize(p.n);
    std::vector<double> w(p.n * m);
    for (std::size_t i = 0; i < p.n; ++i) {
      p.w0[i] = rng.uniform(w0_range.lo, w0_range.hi);
      for (std::size_t j = 0; j < m; ++j) w[i * m + j] = rng.uniform(cfg.weight.lo, cfg.weight.hi);
    }
    p.weights = WeightMatrix::dense(p.n, m, std::move(w));
    mp.periods.push_back(std::move(p));
  }
  return mp;
}

struct SegmentRecord {
  bool solved = false;
  // Length m; zero for products not priced in this batch.
  std::vector<double> eta;
  // Distinct products recommended to at least one customer of the segment.
  std::vector<std::uint32_t> recommended;
};

struct BatchRecord {
  double revenue = 0.0;
  std::vector<double> sold;
  std::vector<double> inventory;  // after the batch
  // Customers who were shown each product.
  std::vector<std::size_t> shown;
  std::vector<SegmentRecord> segments;

  double qty_sold() const { return std::accumulate(sold.begin(), sold.end(), 0.0); }
  double inventory_total() const { return std::accumulate(inventory.begin(), inventory.end(), 0.0); }
};

struct SimTrace {
  std::vector<double> prices;
  std::vector<double> initial_inventory;
  std::vector<BatchRecord> batches;
  std::vector<double> sales_histogram;
  double cumulative_revenue = 0.0;

  std::vector<double> cumulative_revenue_curve() const {
    std::vector<double> out;
    double s = 0.0;
    for (const auto& b : batches) out.push_back(s += b.revenue);
    return out;
  }

  std::vector<double> inventory_curve() const {
    std::vector<double> out;
    for (const auto& b : batches) out.push_back(b.inventory_total());
    return out;
  }
};

namespace detail {

// Customers `customers` of `inst` restricted to `products`, with the given
// capacities (one per kept product).
inline Instance restrict_market(const Instance& inst, std::span<const std::size_t> customers,
                                const std::vector<std::uint32_t>& products, std::vector<double> capacities) {
  Instance out;
  out.n = customers.size();
  out.m = products.size();
  for (auto j : products) out.prices.push_back(inst.prices[j]);
  out.capacities = std::move(capacities);
  out.lambdas.reserve(out.n);
  out.w0.reserve(out.n);
  std::vector<double> w;
  w.reserve(out.n * out.m);
  for (auto i : customers) {
    out.lambdas.push_back(inst.lambdas[i]);
    out.w0.push_back(inst.w0[i]);
    for (auto j : products) w.push_back(inst.weights.at(i, j));
  }
  out.weights = WeightMatrix::dense(out.n, out.m, std::move(w));
  return out;
}

inline double total_lambda(const Instance& inst, std::span<const std::size_t> customers) {
  double s = 0.0;
  for (auto i : customers) s += inst.lambdas[i];
  return s;
}

// Duals over the kept products for one segment's planning problem.
inline std::vector<double> plan_segment(const MultiPeriodInstance& mp, const SimConfig& cfg, std::size_t t,
                                        std::size_t segment, std::size_t segments,
                                        const std::vector<std::uint32_t>& products,
                                        const std::vector<double>& inventory, const std::vector<double>& warm,
                                        std::uint64_t solve_seed) {
  auto members = [&](const Instance& p) {
    std::vector<std::size_t> ids;
    for (std::size_t i = segment; i < p.n; i += segments) ids.push_back(i);
    return ids;
  };
  const Instance& now = mp.periods[t];
  const auto ids = members(now);
  std::vector<double> caps;
  for (auto j : products) caps.push_back(inventory[j]);

  Instance problem;
  if (cfg.horizon == PlanningHorizon::kStacked) {
    MultiPeriodInstance rest;
    std::vector<double> all_caps(now.m, 1.0);
    for (std::size_t k = 0; k < products.size(); ++k) all_caps[products[k]] = caps[k];
    for (std::size_t u = t; u < mp.T(); ++u) {
      const auto u_ids = members(mp.periods[u]);
      rest.periods.push_back(select_customers(mp.periods[u], u_ids, all_caps));
    }
    rest.initial_capacities = all_caps;
    const Instance stacked = stack_periods(rest);
    std::vector<std::size_t> everyone(stacked.n);
    std::iota(everyone.begin(), everyone.end(), std::size_t{0});
    problem = restrict_market(stacked, everyone, products, caps);
  } else {
    if (cfg.horizon == PlanningHorizon::kProrated) {
      // The batch's share of all remaining arrivals; the same for every segment.
      double remaining = 0.0;
      for (std::size_t u = t; u < mp.T(); ++u) {
        remaining += std::accumulate(mp.periods[u].lambdas.begin(), mp.periods[u].lambdas.end(), 0.0);
      }
      const double share = std::accumulate(now.lambdas.begin(), now.lambdas.end(), 0.0) / remaining;
      for (auto& c : caps) c *= share;
    }
    problem = restrict_market(now, ids, products, caps);
  }

  SolverParams params = cfg.solver_params;
  params.seed = solve_seed;
  params.workers = 1;
  params.batch_size = std::min(params.batch_size, problem.n);
  if (cfg.solve_passes > 0.0) {
    params.max_iters = static_cast<std::size_t>(
        std::ceil(cfg.solve_passes * static_cast<double>(problem.n) / static_cast<double>(params.batch_size)));
  }
  params.record_trajectory = false;
  params.distance_reference = nullptr;
  DualPrices start;
  for (auto j : products) start.eta.push_back(warm[j]);
  params.initial_duals = start;
  return spfom_solve(problem, params).duals.eta;
}

// Top rec_limit eligible products for customer i of period `p`.
inline std::vector<std::size_t> recommend(const Instance& p, std::size_t i, const SimConfig& cfg,
                                          const std::vector<std::uint32_t>& products, const std::vector<double>& eta,
                                          bool priced) {
  struct Cand {
    std::size_t j;
    double score;
  };
  std::vector<Cand> cands;
  for (auto j : products) {
    const double w = p.weights.at(i, j);
    if (!(w > 0.0)) continue;
    const double margin = p.prices[j] - (priced ? eta[j] : 0.0);
    if (priced && margin < 0.0) continue;
    cands.push_back({j, cfg.rank_by_weighted_margin ? margin * w : margin});
  }
  if (!priced) {
    std::vector<std::size_t> all;
    for (const auto& c : cands) all.push_back(c.j);
    return all;
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.score > b.score; });
  if (cands.size() > cfg.rec_limit) cands.resize(cfg.rec_limit);
  std::vector<std::size_t> out;
  for (const auto& c : cands) out.push_back(c.j);
  std::sort(out.begin(), out.end());
  return out;
}

// One replication under `segments` independent planners (1 = global).
inline SimTrace run_policy(const MultiPeriodInstance& mp, const SimConfig& cfg, std::size_t segments,
                           std::size_t run) {
  validate_config(cfg);
  const auto rep = validate(mp);
  if (!rep.ok()) throw DomainError(rep.summary());
  const std::size_t m = mp.initial_capacities.size();
  SimTrace trace;
  trace.prices = mp.periods.front().prices;
  trace.initial_inventory = mp.initial_capacities;
  trace.sales_histogram.assign(m, 0.0);
  std::vector<double> inventory = mp.initial_capacities;
  std::vector<std::vector<double>> warm(segments, std::vector<double>(m, 0.0));
  Rng choice_rng(cfg.seed, Stream::kChoice, run);

  for (std::size_t t = 0; t < mp.T(); ++t) {
    const Instance& p = mp.periods[t];
    BatchRecord rec;
    rec.sold.assign(m, 0.0);
    rec.shown.assign(m, 0);
    rec.segments.resize(segments);
    std::vector<std::uint32_t> products;
    for (std::size_t j = 0; j < m; ++j) {
      if (inventory[j] >= 1.0) products.push_back(static_cast<std::uint32_t>(j));
    }
    const bool solve = products.size() > cfg.rec_limit;
    for (std::size_t s = 0; s < segments && s < p.n; ++s) {
      auto& seg = rec.segments[s];
      seg.eta.assign(m, 0.0);
      if (solve) {
        const auto seed = derive_seed(cfg.seed, Stream::kBatchSampling, (run << 40) + (t << 20) + s);
        std::vector<double> eta;
        try {
          eta = plan_segment(mp, cfg, t, s, segments, products, inventory, warm[s], seed);
        } catch (const Error& e) {
          throw NumericalError("batch " + std::to_string(t) + " segment " + std::to_string(s) + ": " + e.what());
        }
        for (std::size_t k = 0; k < products.size(); ++k) seg.eta[products[k]] = eta[k];
        warm[s] = seg.eta;
        seg.solved = true;
      }
    }
    // Recommendations use the batch-start stock; sales hit live stock.
    for (std::size_t s = 0; s < segments && s < p.n; ++s) {
      auto& seg = rec.segments[s];
      std::vector<bool> shown(m, false);
      for (std::size_t i = s; i < p.n; i += segments) {
        const auto offer = recommend(p, i, cfg, products, seg.eta, solve);
        for (auto j : offer) {
          ++rec.shown[j];
          shown[j] = true;
        }
        const auto choice = sample_choice(p, i, Assortment(offer), choice_rng);
        if (choice != kNoPurchase && inventory[choice] >= 1.0) {
          inventory[choice] -= 1.0;
          rec.sold[choice] += 1.0;
          rec.revenue += p.prices[choice];
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        if (shown[j]) seg.recommended.push_back(static_cast<std::uint32_t>(j));
      }
    }
    rec.inventory = inventory;
    for (std::size_t j = 0; j < m; ++j) trace.sales_histogram[j] += rec.sold[j];
    trace.cumulative_revenue += rec.revenue;
    trace.batches.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace detail

// Global bid-price control: one planner for each whole batch.
inline SimTrace run_go_policy(const MultiPeriodInstance& mp, const SimConfig& cfg, std::size_t run = 0) {
  return detail::run_policy(mp, cfg, 1, run);
}

// Market-segment decomposition: customers split round-robin into
// cfg.segments planners that each see the full remaining inventory.
inline SimTrace run_msd_policy(const MultiPeriodInstance& mp, const SimConfig& cfg, std::size_t run = 0) {
  return detail::run_policy(mp, cfg, cfg.segments, run);
}

struct FlaggedValue {
  double value = 0.0;
  // Set when the input had nothing to measure (no sales, no solves).
  bool empty = false;
};

// Shannon entropy in bits of the sales distribution over products.
inline FlaggedValue sales_entropy(const SimTrace& trace) {
  const double total = std::accumulate(trace.sales_histogram.begin(), trace.sales_histogram.end(), 0.0);
  if (!(total > 0.0)) return {0.0, true};
  double h = 0.0;
  for (double s : trace.sales_histogram) {
    if (s > 0.0) {
      const double p = s / total;
      h -= p * std::log2(p);
    }
  }
  return {h, false};
}

// Mean of eta_j over every (batch, segment, recommended product j) where the
// segment solved for duals.
inline FlaggedValue mean_opportunity_cost(const SimTrace& trace) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& b : trace.batches) {
    for (const auto& s : b.segments) {
      if (!s.solved) continue;
      for (auto j : s.recommended) {
        sum += s.eta[j];
        ++count;
      }
    }
  }
  if (count == 0) return {0.0, true};
  return {sum / static_cast<double>(count), false};
}

// Mean eta over solved segments' priced products in one batch (0 if none).
inline double batch_mean_dual(const BatchRecord& b) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : b.segments) {
    if (!s.solved) continue;
    for (double e : s.eta) {
      sum += e;
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

// First batch whose remaining inventory under `b` drops strictly below `a`'s.
inline std::optional<std::size_t> first_inventory_crossing(const SimTrace& a, const SimTrace& b) {
  const std::size_t T = std::min(a.batches.size(), b.batches.size());
  for (std::size_t t = 0; t < T; ++t) {
    if (b.batches[t].inventory_total() < a.batches[t].inventory_total()) return t;
  }
  return std::nullopt;
}

// Student t quantile (Hill's 1970 expansion), accurate to a few 1e-4 for
// df >= 3, which is all the replication statistics here need.
inline double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0) || !(df > 0.0)) throw UsageError("t quantile needs p in (0,1) and df > 0");
  if (p < 0.5) return -student_t_quantile(1.0 - p, df);
  // Normal quantile (Acklam).
  auto normal_q = [](double q) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    if (q > 0.97575) {
      const double r = std::sqrt(-2.0 * std::log(1.0 - q));
      return -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
             ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
    }
    const double r0 = q - 0.5;
    const double r = r0 * r0;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * r0 /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  };
  const double z = normal_q(p);
  const double z2 = z * z;
  const double g1 = (z2 + 1.0) * z / 4.0;
  const double g2 = ((5.0 * z2 + 16.0) * z2 + 3.0) * z / 96.0;
  const double g3 = (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) * z / 384.0;
  const double g4 = ((((79.0 * z2 + 776.0) * z2 + 1482.0) * z2 - 1920.0) * z2 - 945.0) * z / 92160.0;
  return z + g1 / df + g2 / (df * df) + g3 / (df * df * df) + g4 / (df * df * df * df);
}

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  // Two-sided 95% confidence half-width for the mean.
  double ci95 = 0.0;
};

inline SampleSummary summarize(const std::vector<double>& xs) {
  SampleSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  s.ci95 = student_t_quantile(0.975, static_cast<double>(xs.size() - 1)) * s.stddev /
           std::sqrt(static_cast<double>(xs.size()));
  return s;
}

// Paired one-sided test of mean(a - b) > 0 at level alpha.
struct PairedTest {
  double t = 0.0;
  double critical = 0.0;
  bool reject = false;
};

inline PairedTest paired_greater(const std::vector<double>& a, const std::vector<double>& b, double alpha = 0.05) {
  if (a.size() != b.size() || a.size() < 2) throw UsageError("paired test needs two equal samples of size >= 2");
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  const auto s = summarize(d);
  PairedTest out;
  out.critical = student_t_quantile(1.0 - alpha, static_cast<double>(d.size() - 1));
  if (s.stddev == 0.0) {
    out.t = s.mean > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    out.t = s.mean / (s.stddev / std::sqrt(static_cast<double>(d.size())));
  }
  out.reject = out.t > out.critical;
  return out;
}

}  // namespace spfom
