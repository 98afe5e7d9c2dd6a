#pragma once

#include <algorithm>
#include <barrier>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "spfom/error.hpp"
#include "spfom/inner.hpp"
#include "spfom/instance.hpp"
#include "spfom/rng.hpp"

namespace spfom {

// Per-customer allocations with incrementally maintained column sums and
// revenue. Rows never touched by the solver hold the initialization: all
// demand on no-purchase.
class PrimalState {
 public:
  PrimalState() = default;

  static PrimalState no_purchase(const Instance& inst) {
    PrimalState s;
    s.m_ = inst.m;
    s.rows_.resize(inst.n);
    for (std::size_t i = 0; i < inst.n; ++i) s.rows_[i].y0 = inst.lambdas[i];
    s.col_sums_.assign(inst.m, 0.0);
    return s;
  }

  std::size_t n() const { return rows_.size(); }
  std::size_t m() const { return m_; }
  const RowAllocation& row(std::size_t i) const { return rows_[i]; }
  const std::vector<double>& col_sums() const { return col_sums_; }
  double objective_cache() const { return objective_cache_; }

  double y(std::size_t i, std::size_t j) const {
    for (const auto& s : rows_[i].sales) {
      if (s.product == j) return s.quantity;
    }
    return 0.0;
  }

  // [y0, y_1, ..., y_m]
  std::vector<double> dense_row(std::size_t i) const {
    std::vector<double> out(m_ + 1, 0.0);
    out[0] = rows_[i].y0;
    for (const auto& s : rows_[i].sales) out[s.product + 1] = s.quantity;
    return out;
  }

  // Swaps in a new row for customer i and updates the caches by
  // subtracting the old row and adding the new one.
  void replace_row(std::size_t i, RowAllocation row, std::span<const double> prices) {
    auto& old = rows_[i];
    double old_rev = 0.0;
    for (const auto& s : old.sales) {
      col_sums_[s.product] -= s.quantity;
      old_rev += s.quantity * prices[s.product];
    }
    double new_rev = 0.0;
    for (const auto& s : row.sales) {
      col_sums_[s.product] += s.quantity;
      new_rev += s.quantity * prices[s.product];
    }
    objective_cache_ -= old_rev;
    objective_cache_ += new_rev;
    old = std::move(row);
  }

  // Overwrites row i and rebuilds caches from scratch (used for states
  // assembled outside the solver).
  void set_row(std::size_t i, RowAllocation row) { rows_[i] = std::move(row); }

  void rebuild_caches(std::span<const double> prices) {
    std::fill(col_sums_.begin(), col_sums_.end(), 0.0);
    objective_cache_ = 0.0;
    for (const auto& r : rows_) {
      for (const auto& s : r.sales) {
        col_sums_[s.product] += s.quantity;
        objective_cache_ += s.quantity * prices[s.product];
      }
    }
  }

  static PrimalState from_dense(const Instance& inst, const std::vector<std::vector<double>>& y) {
    if (y.size() != inst.n) throw StructuralError("primal rows must number n");
    PrimalState s = no_purchase(inst);
    for (std::size_t i = 0; i < inst.n; ++i) {
      if (y[i].size() != inst.m + 1) throw StructuralError("primal row must have length m + 1");
      RowAllocation row;
      row.y0 = y[i][0];
      for (std::size_t j = 0; j < inst.m; ++j) {
        if (y[i][j + 1] != 0.0) row.sales.push_back({static_cast<std::uint32_t>(j), y[i][j + 1]});
      }
      s.rows_[i] = std::move(row);
    }
    s.rebuild_caches(inst.prices);
    return s;
  }

 private:
  std::size_t m_ = 0;
  std::vector<RowAllocation> rows_;
  std::vector<double> col_sums_;
  double objective_cache_ = 0.0;
};

struct SolverParams {
  double tau = 0.1;
  // nullopt selects 1 / (2R).
  std::optional<double> mu = 0.5;
  bool penalized = true;
  std::size_t batch_size = 10;
  std::size_t workers = 1;
  double golden_tol = 1e-3;
  // nullopt selects max(100, n / 100).
  std::optional<std::size_t> stagnation_window;
  double stagnation_rel_tol = 1e-9;
  std::size_t max_iters = 1'000'000;
  std::uint64_t seed = 0;
  // Warm start for the dual vector (length = number of resources).
  std::optional<DualPrices> initial_duals;
  bool record_trajectory = false;
  // 0 selects ceil(max_iters / 1000).
  std::size_t trajectory_stride = 0;
  // When set, trajectory points carry ||y^t - reference||^2.
  const PrimalState* distance_reference = nullptr;
};

struct TrajectoryPoint {
  std::size_t iter = 0;
  double objective = 0.0;
  double dual_norm = 0.0;
  std::optional<double> dist_sq;
};

struct SolveReport {
  double objective = 0.0;
  DualPrices duals;
  PrimalState primal;
  std::size_t iterations = 0;
  double overload_ratio = 0.0;
  bool stagnated = false;
  double mu = 0.0;
  // Per-resource usage sum_i sum_j B_lj y_ij (equals col_sums without bundles).
  std::vector<double> resource_usage;
  // max over iterations of sum_j (r_j - (B^T eta)_j).
  double max_coefficient_sum = 0.0;
  std::vector<TrajectoryPoint> trajectory;
};

// max_i sum_j w_ij r_j / sum_j w_ij
inline double compute_R(const Instance& inst) {
  double best = 0.0;
  for (std::size_t i = 0; i < inst.n; ++i) {
    double num = 0.0;
    double den = 0.0;
    inst.weights.for_each_nonzero(i, [&](std::size_t j, double w) {
      num += w * inst.prices[j];
      den += w;
    });
    if (!(den > 0.0)) throw DomainError("customer " + std::to_string(i) + " has no positive product weight");
    best = std::max(best, num / den);
  }
  return best;
}

inline double default_mu(const Instance& inst) {
  const double R = compute_R(inst);
  if (!(R > 0.0)) throw ConfigError("R = 0 (all prices zero): supply mu explicitly");
  return 1.0 / (2.0 * R);
}

// eta_j <- max(0, eta_j - tau (c_j - sum_i y_ij))
inline DualPrices dual_step(const DualPrices& duals, std::span<const double> col_sums,
                            std::span<const double> capacities, double tau) {
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  DualPrices out;
  out.eta.resize(duals.eta.size());
  for (std::size_t j = 0; j < duals.eta.size(); ++j) {
    out.eta[j] = std::max(0.0, duals.eta[j] - tau * (capacities[j] - col_sums[j]));
  }
  return out;
}

// eta_j <- max(0, (1 - tau mu) eta_j - tau (c_j - sum_i y_ij))
inline DualPrices dual_step_penalized(const DualPrices& duals, std::span<const double> col_sums,
                                      std::span<const double> capacities, double tau, double mu) {
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (mu < 0.0 || tau * mu > 1.0) throw ConfigError("penalized dual step needs 0 <= tau * mu <= 1");
  DualPrices out;
  out.eta.resize(duals.eta.size());
  const double shrink = 1.0 - tau * mu;
  for (std::size_t j = 0; j < duals.eta.size(); ++j) {
    out.eta[j] = std::max(0.0, shrink * duals.eta[j] - tau * (capacities[j] - col_sums[j]));
  }
  return out;
}

// Recomputes sum_ij y_ij r_j from the rows and checks the cache.
inline double objective_value(const PrimalState& primal, const Instance& inst) {
  double total = 0.0;
  for (std::size_t i = 0; i < primal.n(); ++i) {
    for (const auto& s : primal.row(i).sales) total += s.quantity * inst.prices[s.product];
  }
  if (std::abs(total - primal.objective_cache()) > 1e-8 * std::max(1.0, std::abs(total))) {
    throw NumericalError("objective cache drifted: cache " + std::to_string(primal.objective_cache()) +
                         " vs recomputed " + std::to_string(total));
  }
  return total;
}

// max_j |col_sums[j] - sum_i y_ij|
inline double col_sum_drift(const PrimalState& primal) {
  std::vector<double> fresh(primal.m(), 0.0);
  for (std::size_t i = 0; i < primal.n(); ++i) {
    for (const auto& s : primal.row(i).sales) fresh[s.product] += s.quantity;
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < primal.m(); ++j) worst = std::max(worst, std::abs(fresh[j] - primal.col_sums()[j]));
  return worst;
}

// sum_j max(0, usage_j - c_j) / sum_j c_j
inline double overload_ratio(std::span<const double> usage, std::span<const double> capacities) {
  double over = 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < capacities.size(); ++j) {
    over += std::max(0.0, usage[j] - capacities[j]);
    total += capacities[j];
  }
  return over / total;
}

inline double overload_ratio(const PrimalState& primal, const Instance& inst) {
  return overload_ratio(primal.col_sums(), inst.capacities);
}

// sum_i ||y_i - ref_i||^2 over all m + 1 coordinates.
inline double squared_distance(const PrimalState& a, const PrimalState& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i) {
    const auto ra = a.dense_row(i);
    const auto rb = b.dense_row(i);
    for (std::size_t j = 0; j < ra.size(); ++j) total += (ra[j] - rb[j]) * (ra[j] - rb[j]);
  }
  return total;
}

// Fixed team of k workers; run(task) calls task(w) for every w in [0, k) and
// returns once all have finished. Worker 0 is the calling thread.
class WorkerTeam {
 public:
  explicit WorkerTeam(std::size_t k) : start_(static_cast<std::ptrdiff_t>(k)), done_(static_cast<std::ptrdiff_t>(k)) {
    for (std::size_t w = 1; w < k; ++w) {
      threads_.emplace_back([this, w] {
        for (;;) {
          start_.arrive_and_wait();
          if (stop_) return;
          (*task_)(w);
          done_.arrive_and_wait();
        }
      });
    }
  }

  WorkerTeam(const WorkerTeam&) = delete;
  WorkerTeam& operator=(const WorkerTeam&) = delete;

  ~WorkerTeam() {
    if (!threads_.empty()) {
      stop_ = true;
      start_.arrive_and_wait();
      for (auto& t : threads_) t.join();
    }
  }

  void run(const std::function<void(std::size_t)>& task) {
    if (threads_.empty()) {
      task(0);
      return;
    }
    task_ = &task;
    start_.arrive_and_wait();
    task(0);
    done_.arrive_and_wait();
  }

 private:
  std::barrier<> start_;
  std::barrier<> done_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

// Resources consumed by each product. The plain SBLP uses the identity map
// (product j is resource j); bundles map a product onto several resources.
struct ResourceLayer {
  std::size_t L = 0;
  std::vector<std::vector<std::uint32_t>> resources_of_product;
  std::vector<double> capacities;

  static ResourceLayer identity(const Instance& inst) {
    ResourceLayer layer;
    layer.L = inst.m;
    layer.resources_of_product.resize(inst.m);
    for (std::size_t j = 0; j < inst.m; ++j) layer.resources_of_product[j] = {static_cast<std::uint32_t>(j)};
    layer.capacities = inst.capacities;
    return layer;
  }

  // r_j - sum_{l in resources(j)} eta_l
  std::vector<double> coefficients(std::span<const double> prices, const DualPrices& duals) const {
    std::vector<double> coef(prices.size());
    for (std::size_t j = 0; j < prices.size(); ++j) {
      double charge = 0.0;
      for (auto l : resources_of_product[j]) charge += duals.eta[l];
      coef[j] = prices[j] - charge;
    }
    return coef;
  }
};

inline void validate_params(const Instance& inst, const SolverParams& p, std::size_t workers) {
  if (!(p.tau > 0.0)) throw ConfigError("tau must be > 0");
  if (p.mu && *p.mu < 0.0) throw ConfigError("mu must be >= 0");
  if (p.batch_size < 1 || p.batch_size > inst.n) throw ConfigError("batch_size must lie in [1, n]");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (workers * p.batch_size > inst.n) throw ConfigError("workers * batch_size must not exceed n");
  if (!(p.golden_tol > 0.0)) throw ConfigError("golden_tol must be > 0");
  if (p.max_iters < 1) throw ConfigError("max_iters must be >= 1");
}

inline std::size_t default_stagnation_window(std::size_t n) { return std::max<std::size_t>(100, n / 100); }

namespace detail {

// Algorithm core shared by the plain, parallel and bundle solvers.
inline SolveReport run_spfom(const Instance& inst, const ResourceLayer& layer, const SolverParams& params,
                             std::size_t workers) {
  require_valid(inst);
  validate_params(inst, params, workers);
  const double mu = params.mu ? *params.mu : default_mu(inst);
  if (params.penalized && params.tau * mu > 1.0) throw ConfigError("penalized step needs tau * mu <= 1");
  const std::size_t n = inst.n;
  const std::size_t B = params.batch_size;
  const std::size_t sample_size = B * workers;
  const std::size_t window = params.stagnation_window.value_or(default_stagnation_window(n));
  const std::size_t stride = params.trajectory_stride
                                 ? params.trajectory_stride
                                 : std::max<std::size_t>(1, (params.max_iters + 999) / 1000);
  const PrimalState* ref = params.distance_reference;
  if (ref && (ref->n() != n || ref->m() != inst.m)) throw StructuralError("distance reference has wrong shape");

  SolveReport report;
  report.mu = mu;
  report.primal = PrimalState::no_purchase(inst);
  PrimalState& primal = report.primal;
  DualPrices duals;
  if (params.initial_duals) {
    if (params.initial_duals->eta.size() != layer.L) throw StructuralError("initial duals must have one entry per resource");
    duals = *params.initial_duals;
    for (auto& e : duals.eta) e = std::max(0.0, e);
  } else {
    duals.eta.assign(layer.L, 0.0);
  }
  std::vector<double> usage(layer.L, 0.0);

  double dist_sq = 0.0;
  auto row_distance = [&](std::size_t i, const RowAllocation& row) {
    auto a = ref->dense_row(i);
    a[0] -= row.y0;
    for (const auto& s : row.sales) a[s.product + 1] -= s.quantity;
    double d = 0.0;
    for (double v : a) d += v * v;
    return d;
  };
  if (ref) dist_sq = squared_distance(primal, *ref);

  auto dual_norm = [&] {
    double s = 0.0;
    for (double e : duals.eta) s += e * e;
    return std::sqrt(s);
  };
  auto record = [&](std::size_t iter) {
    TrajectoryPoint pt{iter, primal.objective_cache(), dual_norm(), std::nullopt};
    if (ref) pt.dist_sq = dist_sq;
    report.trajectory.push_back(pt);
  };
  if (params.record_trajectory) record(0);

  Rng rng(params.seed, Stream::kBatchSampling);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  std::vector<CustomerView> views(workers);
  std::vector<RowAllocation> new_rows(sample_size);
  std::vector<std::size_t> sample(sample_size);
  WorkerTeam team(workers);
  CoefficientOrder order;
  std::function<void(std::size_t)> solve_block = [&](std::size_t w) {
    for (std::size_t k = w * B; k < (w + 1) * B; ++k) {
      const std::size_t i = sample[k];
      prepare_customer(inst, i, order, views[w]);
      const auto g = golden_search(views[w], params.golden_tol);
      fill_row(views[w], g.y0, new_rows[k]);
    }
  };

  std::size_t flat_run = 0;
  std::size_t iter = 0;
  while (iter < params.max_iters) {
    ++iter;
    auto coef = layer.coefficients(inst.prices, duals);
    double coef_sum = 0.0;
    for (double c : coef) coef_sum += c;
    report.max_coefficient_sum = iter == 1 ? coef_sum : std::max(report.max_coefficient_sum, coef_sum);
    order = make_coefficient_order(std::move(coef));

    if (sample_size == n) {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    } else {
      // Partial Fisher-Yates: the first sample_size slots of perm become a
      // uniform draw without replacement.
      for (std::size_t k = 0; k < sample_size; ++k) {
        const std::size_t pick = k + static_cast<std::size_t>(rng.below(n - k));
        std::swap(perm[k], perm[pick]);
        sample[k] = perm[k];
      }
    }

    team.run(solve_block);

    // Merge in worker-index order.
    const double before = primal.objective_cache();
    for (std::size_t k = 0; k < sample_size; ++k) {
      const std::size_t i = sample[k];
      const auto& old = primal.row(i);
      for (const auto& s : old.sales) {
        for (auto l : layer.resources_of_product[s.product]) usage[l] -= s.quantity;
      }
      for (const auto& s : new_rows[k].sales) {
        for (auto l : layer.resources_of_product[s.product]) usage[l] += s.quantity;
      }
      if (ref) {
        dist_sq -= row_distance(i, old);
        dist_sq += row_distance(i, new_rows[k]);
      }
      primal.replace_row(i, new_rows[k], inst.prices);
    }

    duals = params.penalized ? dual_step_penalized(duals, usage, layer.capacities, params.tau, mu)
                             : dual_step(duals, usage, layer.capacities, params.tau);

    const double after = primal.objective_cache();
    const bool flat = std::abs(after - before) <= params.stagnation_rel_tol * std::max(std::abs(before), std::abs(after));
    flat_run = flat ? flat_run + 1 : 0;
    if (params.record_trajectory && iter % stride == 0) record(iter);
    if (flat_run >= window) {
      report.stagnated = true;
      break;
    }
  }
  if (params.record_trajectory && (report.trajectory.empty() || report.trajectory.back().iter != iter)) record(iter);

  report.iterations = iter;
  report.duals = std::move(duals);
  report.resource_usage = std::move(usage);
  report.objective = objective_value(primal, inst);
  report.overload_ratio = overload_ratio(report.resource_usage, layer.capacities);
  return report;
}

}  // namespace detail

// Serial stochastic primal-dual solve: B customers per iteration.
inline SolveReport spfom_solve(const Instance& inst, const SolverParams& params) {
  return detail::run_spfom(inst, ResourceLayer::identity(inst), params, 1);
}

// k workers each solve B of the k * B sampled customers against the same dual
// snapshot; rows merge in worker order before the single dual step.
inline SolveReport spfom_solve_parallel(const Instance& inst, const SolverParams& params) {
  return detail::run_spfom(inst, ResourceLayer::identity(inst), params, params.workers);
}

}  // namespace spfom
