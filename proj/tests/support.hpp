#pragma once

// Hand-rolled generators and independent oracles shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "spfom/instance.hpp"

namespace spfom::testing {

// Test-side generator, deliberately separate from the library's Rng.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(eng_);
  }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }

 private:
  std::mt19937_64 eng_;
};

inline Instance make_instance(std::vector<double> prices, std::vector<double> capacities, std::vector<double> w0,
                              const std::vector<std::vector<double>>& weights, std::vector<double> lambdas = {}) {
  Instance inst;
  inst.n = w0.size();
  inst.m = prices.size();
  inst.prices = std::move(prices);
  inst.capacities = std::move(capacities);
  inst.w0 = std::move(w0);
  inst.lambdas = lambdas.empty() ? std::vector<double>(inst.n, 1.0) : std::move(lambdas);
  std::vector<double> flat;
  for (const auto& row : weights) flat.insert(flat.end(), row.begin(), row.end());
  inst.weights = WeightMatrix::dense(inst.n, inst.m, std::move(flat));
  return inst;
}

struct RandomShape {
  std::size_t n = 5;
  std::size_t m = 3;
  double zero_weight_prob = 0.0;
  bool random_lambda = false;
  double cap_lo = 0.05;
  double cap_hi = 2.0;
};

// Random valid MNL instance; every customer keeps at least one positive weight.
inline Instance random_instance(Gen& g, const RandomShape& s) {
  std::vector<double> prices(s.m), caps(s.m), w0(s.n), lambdas(s.n);
  for (auto& r : prices) r = g.uniform(0.1, 2.0);
  for (auto& c : caps) c = g.uniform(s.cap_lo, s.cap_hi);
  std::vector<std::vector<double>> w(s.n, std::vector<double>(s.m));
  for (std::size_t i = 0; i < s.n; ++i) {
    w0[i] = g.uniform(0.1, 2.0);
    lambdas[i] = s.random_lambda ? g.uniform(0.2, 3.0) : 1.0;
    for (auto& x : w[i]) x = g.coin(s.zero_weight_prob) ? 0.0 : g.uniform(0.05, 2.0);
    if (std::all_of(w[i].begin(), w[i].end(), [](double x) { return x == 0.0; })) w[i][g.index(0, s.m - 1)] = 1.0;
  }
  return make_instance(prices, caps, w0, w, lambdas);
}

// Fixed-y0 inner value by an independent fractional-knapsack evaluation:
// products sorted by coefficient, each filled to min(cap, remaining budget).
inline double knapsack_value(const std::vector<double>& coef, const std::vector<double>& w, double w0,
                             double lambda, double y0) {
  std::vector<std::size_t> idx(coef.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return coef[a] > coef[b]; });
  double budget = lambda - y0;
  double v = 0.0;
  for (auto j : idx) {
    const double take = std::min(w[j] * y0 / w0, std::max(0.0, budget));
    v += take * coef[j];
    budget -= take;
  }
  return v;
}

// Best inner value over the uniform y0 grid with the given step on
// [lower, lambda], plus the right end point.
inline double grid_inner_optimum(const std::vector<double>& coef, const std::vector<double>& w, double w0,
                                 double lambda, double step) {
  double sum_w = 0.0;
  for (double x : w) sum_w += x;
  const double lower = lambda * w0 / (w0 + sum_w);
  double best = -INFINITY;
  for (double y0 = lower; y0 <= lambda; y0 += step * lambda) best = std::max(best, knapsack_value(coef, w, w0, lambda, y0));
  return std::max(best, knapsack_value(coef, w, w0, lambda, lambda));
}

// Random feasible sales row for a customer: a no-purchase level, then
// products filled at random fractions of their ratio caps, with the
// residual pushed back onto y0 through a rescale.
inline std::vector<double> random_feasible_row(Gen& g, const std::vector<double>& w, double w0, double lambda) {
  const std::size_t m = w.size();
  std::vector<double> frac(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double u = g.uniform(0.0, 1.0);
    frac[j] = u < 0.25 ? 1.0 : (u < 0.4 ? 0.0 : g.uniform(0.0, 1.0));
  }
  // y_j = frac_j * w_j * rho, y0 = w0 * rho, sum = lambda.
  double mass = w0;
  for (std::size_t j = 0; j < m; ++j) mass += frac[j] * w[j];
  const double rho = lambda / mass;
  std::vector<double> row(m + 1);
  row[0] = w0 * rho;
  for (std::size_t j = 0; j < m; ++j) row[j + 1] = frac[j] * w[j] * rho;
  return row;
}

}  // namespace spfom::testing
