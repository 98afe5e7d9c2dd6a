#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "spfom/error.hpp"
#include "spfom/instance.hpp"

namespace spfom {

// Capacity shadow prices (bid prices), one per constrained resource.
struct DualPrices {
  std::vector<double> eta;

  friend bool operator==(const DualPrices&, const DualPrices&) = default;
};

// Per-product objective coefficients of the inner problem, with the greedy
// fill order: descending coefficient, ties by ascending product index.
struct CoefficientOrder {
  std::vector<double> coef;
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> rank;  // rank[j] = position of product j in order
};

inline CoefficientOrder make_coefficient_order(std::vector<double> coef) {
  CoefficientOrder out;
  out.coef = std::move(coef);
  const std::size_t m = out.coef.size();
  out.order.resize(m);
  std::iota(out.order.begin(), out.order.end(), 0u);
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return out.coef[a] > out.coef[b]; });
  out.rank.resize(m);
  for (std::size_t k = 0; k < m; ++k) out.rank[out.order[k]] = static_cast<std::uint32_t>(k);
  return out;
}

// r_j - eta_j.
inline CoefficientOrder make_coefficient_order(const Instance& inst, const DualPrices& duals) {
  if (duals.eta.size() != inst.m) throw StructuralError("dual vector must have length m");
  std::vector<double> coef(inst.m);
  for (std::size_t j = 0; j < inst.m; ++j) coef[j] = inst.prices[j] - duals.eta[j];
  return make_coefficient_order(std::move(coef));
}

// One customer's positive-weight products in fill order, ready for repeated
// greedy evaluations at different no-purchase levels.
struct CustomerView {
  struct Slot {
    std::uint32_t product;
    double weight;
    double coef;
  };
  double lambda = 1.0;
  double w0 = 1.0;
  double weight_sum = 0.0;
  std::vector<Slot> slots;
};

inline void prepare_customer(const Instance& inst, std::size_t i, const CoefficientOrder& order,
                             CustomerView& view) {
  view.lambda = inst.lambdas[i];
  view.w0 = inst.w0[i];
  view.weight_sum = 0.0;
  view.slots.clear();
  if (!inst.weights.is_sparse()) {
    for (auto j : order.order) {
      const double w = inst.weights.at(i, j);
      if (w > 0.0) view.slots.push_back({j, w, order.coef[j]});
    }
  } else {
    inst.weights.for_each_nonzero(i, [&](std::size_t j, double w) {
      view.slots.push_back({static_cast<std::uint32_t>(j), w, order.coef[j]});
    });
    std::sort(view.slots.begin(), view.slots.end(),
              [&](const auto& a, const auto& b) { return order.rank[a.product] < order.rank[b.product]; });
  }
  // Summed in ascending product order so the bound is layout independent.
  inst.weights.for_each_nonzero(i, [&](std::size_t, double w) { view.weight_sum += w; });
}

inline CustomerView prepare_customer(const Instance& inst, std::size_t i, const CoefficientOrder& order) {
  CustomerView view;
  prepare_customer(inst, i, order, view);
  return view;
}

// Smallest no-purchase quantity for which the ratio caps can absorb the
// remaining demand: lambda * w0 / (w0 + sum_j w_j).
inline double feasible_nopurchase_bound(const CustomerView& view) {
  return view.lambda * view.w0 / (view.w0 + view.weight_sum);
}

inline double feasible_nopurchase_bound(const Instance& inst, std::size_t i) {
  if (i >= inst.n) throw UsageError("customer index " + std::to_string(i) + " out of range");
  return inst.lambdas[i] * inst.w0[i] / (inst.w0[i] + inst.weights.row_sum(i));
}

namespace detail {

inline double budget_slack(const CustomerView& view) { return 1e-12 * view.lambda; }

inline void check_nopurchase_level(const CustomerView& view, double y0) {
  const double slack = budget_slack(view);
  if (y0 > view.lambda + slack) throw UsageError("no-purchase level exceeds lambda");
  if (y0 < feasible_nopurchase_bound(view) - slack) {
    throw InfeasibleError("no-purchase level below the feasibility bound");
  }
}

}  // namespace detail

// Greedy value z(y0) without materializing the row.
inline double inner_value(const CustomerView& view, double y0) {
  double budget = view.lambda - y0;
  double value = 0.0;
  const double scale = y0 / view.w0;
  for (const auto& s : view.slots) {
    if (budget <= 0.0) break;
    const double take = std::min(s.weight * scale, budget);
    value += take * s.coef;
    budget -= take;
  }
  return value;
}

struct Sale {
  std::uint32_t product;
  double quantity;

  friend bool operator==(const Sale&, const Sale&) = default;
};

// One customer's allocation: no-purchase mass plus positive product sales.
struct RowAllocation {
  double y0 = 0.0;
  std::vector<Sale> sales;

  friend bool operator==(const RowAllocation&, const RowAllocation&) = default;
};

// Greedy fill at fixed y0: products in fill order, each capped at
// w_j * y0 / w0, until the budget lambda - y0 is spent.
inline double fill_row(const CustomerView& view, double y0, RowAllocation& row) {
  detail::check_nopurchase_level(view, y0);
  row.y0 = y0;
  row.sales.clear();
  double budget = view.lambda - y0;
  double value = 0.0;
  const double scale = y0 / view.w0;
  for (const auto& s : view.slots) {
    if (budget <= 0.0) break;
    const double take = std::min(s.weight * scale, budget);
    if (take > 0.0) row.sales.push_back({s.product, take});
    value += take * s.coef;
    budget -= take;
  }
  if (budget > detail::budget_slack(view)) {
    throw InfeasibleError("greedy exhausted all products with budget left");
  }
  return value;
}

// Dense inner solution: y_row[0] = y0, y_row[j + 1] = y_ij.
struct InnerSolution {
  std::vector<double> y_row;
  double value = 0.0;
};

inline InnerSolution to_inner_solution(const RowAllocation& row, std::size_t m, double value) {
  InnerSolution out;
  out.y_row.assign(m + 1, 0.0);
  out.y_row[0] = row.y0;
  for (const auto& s : row.sales) out.y_row[s.product + 1] = s.quantity;
  out.value = value;
  return out;
}

inline InnerSolution fast_inner(const Instance& inst, std::size_t i, double y0, const DualPrices& duals) {
  if (i >= inst.n) throw UsageError("customer index " + std::to_string(i) + " out of range");
  const auto order = make_coefficient_order(inst, duals);
  const auto view = prepare_customer(inst, i, order);
  RowAllocation row;
  const double value = fill_row(view, y0, row);
  return to_inner_solution(row, inst.m, value);
}

struct GoldenResult {
  double y0 = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

// Golden-section maximization of the concave z(y0) over
// [feasible bound, lambda], shrinking until the bracket is at most
// tol * lambda wide. z is piecewise linear with kinks where the greedy
// saturates another cap, so the kinks left inside the final bracket are
// evaluated too; the bracket always holds a maximizer.
inline GoldenResult golden_search(const CustomerView& view, double tol) {
  if (!(tol > 0.0)) throw UsageError("golden-section tolerance must be > 0");
  constexpr double kInvPhi = 0.6180339887498949;
  GoldenResult best;
  auto consider = [&](double y0, double v) {
    if (best.evaluations == 0 || v > best.value || (v == best.value && y0 < best.y0)) {
      best.y0 = y0;
      best.value = v;
    }
    ++best.evaluations;
  };
  auto eval = [&](double y0) {
    const double v = inner_value(view, y0);
    consider(y0, v);
    return v;
  };

  double lo = feasible_nopurchase_bound(view);
  double hi = view.lambda;
  const double width = tol * view.lambda;
  eval(lo);
  eval(hi);
  if (hi - lo > width) {
    double c = hi - kInvPhi * (hi - lo);
    double d = lo + kInvPhi * (hi - lo);
    double fc = eval(c);
    double fd = eval(d);
    while (hi - lo > width) {
      if (fc < fd) {
        lo = c;
        c = d;
        fc = fd;
        d = lo + kInvPhi * (hi - lo);
        fd = eval(d);
      } else {
        hi = d;
        d = c;
        fd = fc;
        c = hi - kInvPhi * (hi - lo);
        fc = eval(c);
      }
    }
  }
  // Kinks: prefix t of the fill order saturates exactly at
  // y0 = lambda * w0 / (w0 + W_t).
  double cumulative = 0.0;
  for (const auto& s : view.slots) {
    cumulative += s.weight;
    const double kink = view.lambda * view.w0 / (view.w0 + cumulative);
    if (kink < lo) break;
    if (kink <= hi) eval(kink);
  }
  return best;
}

inline InnerSolution solve_inner_golden(const Instance& inst, std::size_t i, const DualPrices& duals,
                                        double tol = 1e-3) {
  if (i >= inst.n) throw UsageError("customer index " + std::to_string(i) + " out of range");
  const auto order = make_coefficient_order(inst, duals);
  const auto view = prepare_customer(inst, i, order);
  const auto g = golden_search(view, tol);
  RowAllocation row;
  const double value = fill_row(view, g.y0, row);
  return to_inner_solution(row, inst.m, value);
}

}  // namespace spfom
