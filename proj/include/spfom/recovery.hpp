#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "spfom/choice.hpp"
#include "spfom/error.hpp"
#include "spfom/instance.hpp"
#include "spfom/solver.hpp"

namespace spfom {

struct PolicyAtom {
  // Number of products offered: the first `length` entries of the order.
  std::size_t length = 0;
  double probability = 0.0;
};

// Randomized offer for one customer over nested assortments.
struct CustomerPolicy {
  std::size_t customer = 0;
  // Positive-weight products by descending y_ij / w_ij, ties by index.
  std::vector<std::uint32_t> order;
  std::vector<PolicyAtom> support;

  Assortment prefix(std::size_t length) const {
    return Assortment(std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(length)));
  }

  double total_probability() const {
    double s = 0.0;
    for (const auto& a : support) s += a.probability;
    return s;
  }
};

struct AssortmentPolicy {
  std::vector<CustomerPolicy> customers;
};

namespace detail {

inline constexpr double kRowTol = 1e-8;

inline void check_row_feasible(const Instance& inst, std::size_t i, const std::vector<double>& y) {
  const double lambda = inst.lambdas[i];
  const double tol = kRowTol * std::max(1.0, lambda);
  double total = 0.0;
  for (double v : y) {
    if (v < -tol) throw DomainError("row " + std::to_string(i) + " has a negative entry");
    total += v;
  }
  if (std::abs(total - lambda) > tol) throw DomainError("row " + std::to_string(i) + " does not sum to lambda");
  const double rho0 = y[0] / inst.w0[i];
  for (std::size_t j = 0; j < inst.m; ++j) {
    const double w = inst.weights.at(i, j);
    if (w == 0.0) {
      if (std::abs(y[j + 1]) > tol) throw DomainError("row " + std::to_string(i) + " sells a zero-weight product");
    } else if (y[j + 1] > w * rho0 + tol) {
      throw DomainError("row " + std::to_string(i) + " violates the ratio constraint for product " + std::to_string(j));
    }
  }
}

}  // namespace detail

// Telescoping decomposition of row i into nested assortments. With ratios
// rho_0 = y_0 / w_0 >= rho_1 >= ... >= rho_K over the sorted products and
// W_l the weight of the first l products,
//   alpha_l = (rho_l - rho_{l+1}) (w_0 + W_l) / lambda   for l < K,
//   alpha_K = rho_K (w_0 + W_K) / lambda.
inline CustomerPolicy recover_assortment_distribution(const Instance& inst, const PrimalState& primal, std::size_t i) {
  if (i >= inst.n) throw UsageError("customer index " + std::to_string(i) + " out of range");
  const auto y = primal.dense_row(i);
  detail::check_row_feasible(inst, i, y);

  CustomerPolicy policy;
  policy.customer = i;
  std::vector<double> ratio(inst.m, 0.0);
  for (std::size_t j = 0; j < inst.m; ++j) {
    const double w = inst.weights.at(i, j);
    if (w > 0.0) {
      policy.order.push_back(static_cast<std::uint32_t>(j));
      ratio[j] = std::max(0.0, y[j + 1]) / w;
    }
  }
  std::stable_sort(policy.order.begin(), policy.order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return ratio[a] > ratio[b]; });

  const std::size_t K = policy.order.size();
  const double lambda = inst.lambdas[i];
  // rho[0] is the no-purchase ratio; it heads the order.
  std::vector<double> rho(K + 1);
  rho[0] = std::max(0.0, y[0]) / inst.w0[i];
  for (std::size_t l = 0; l < K; ++l) rho[l + 1] = std::min(ratio[policy.order[l]], rho[0]);

  double mass = inst.w0[i];
  for (std::size_t l = 0; l <= K; ++l) {
    const double gap = l < K ? rho[l] - rho[l + 1] : rho[l];
    const double p = gap * mass / lambda;
    if (p > 0.0) policy.support.push_back({l, p});
    if (l < K) mass += inst.weights.at(i, policy.order[l]);
  }
  return policy;
}

inline AssortmentPolicy recover_policy(const Instance& inst, const PrimalState& primal) {
  AssortmentPolicy out;
  out.customers.reserve(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i) out.customers.push_back(recover_assortment_distribution(inst, primal, i));
  return out;
}

// lambda_i * sum_l alpha_l * pi(S_l), slot 0 is no-purchase.
inline std::vector<double> implied_row(const Instance& inst, const CustomerPolicy& policy) {
  std::vector<double> row(inst.m + 1, 0.0);
  const double lambda = inst.lambdas[policy.customer];
  for (const auto& atom : policy.support) {
    const auto p = mnl_probability(inst, policy.customer, policy.prefix(atom.length));
    for (std::size_t j = 0; j <= inst.m; ++j) row[j] += lambda * atom.probability * p[j];
  }
  return row;
}

inline double policy_expected_revenue(const Instance& inst, const AssortmentPolicy& policy) {
  double total = 0.0;
  for (const auto& cp : policy.customers) {
    const auto row = implied_row(inst, cp);
    for (std::size_t j = 0; j < inst.m; ++j) total += row[j + 1] * inst.prices[j];
  }
  return total;
}

// max over customers in the policy and all slots j (including no-purchase)
// of |lambda_i sum_l alpha_l pi_ij(S_l) - y_ij|.
inline double policy_consistency_residual(const Instance& inst, const AssortmentPolicy& policy,
                                          const PrimalState& primal) {
  double worst = 0.0;
  for (const auto& cp : policy.customers) {
    const auto row = implied_row(inst, cp);
    const auto y = primal.dense_row(cp.customer);
    for (std::size_t j = 0; j <= inst.m; ++j) worst = std::max(worst, std::abs(row[j] - y[j]));
  }
  return worst;
}

}  // namespace spfom
