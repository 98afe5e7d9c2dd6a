#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "spfom/error.hpp"
#include "spfom/instance.hpp"
#include "spfom/rng.hpp"

namespace spfom {

// Sorted, duplicate-free set of product indices offered to one customer.
class Assortment {
 public:
  Assortment() = default;

  // Sorts and deduplicates `products`.
  explicit Assortment(std::vector<std::size_t> products) : ids_(std::move(products)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  static Assortment all(std::size_t m) {
    std::vector<std::size_t> ids(m);
    for (std::size_t j = 0; j < m; ++j) ids[j] = j;
    return Assortment(std::move(ids));
  }

  const std::vector<std::size_t>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains(std::size_t j) const { return std::binary_search(ids_.begin(), ids_.end(), j); }

  friend bool operator==(const Assortment&, const Assortment&) = default;

 private:
  std::vector<std::size_t> ids_;
};

namespace detail {

inline void check_choice_args(const Instance& inst, std::size_t i, const Assortment& s) {
  if (i >= inst.n) throw UsageError("customer index " + std::to_string(i) + " out of range");
  if (!s.empty() && s.ids().back() >= inst.m) {
    throw UsageError("assortment product " + std::to_string(s.ids().back()) + " out of range");
  }
}

}  // namespace detail

// MNL choice probabilities of customer i facing s. Slot 0 is no-purchase,
// slot j + 1 is product j.
inline std::vector<double> mnl_probability(const Instance& inst, std::size_t i, const Assortment& s) {
  detail::check_choice_args(inst, i, s);
  std::vector<double> p(inst.m + 1, 0.0);
  double denom = inst.w0[i];
  for (auto j : s.ids()) denom += inst.weights.at(i, j);
  for (auto j : s.ids()) p[j + 1] = inst.weights.at(i, j) / denom;
  p[0] = inst.w0[i] / denom;
  return p;
}

// Generalized attraction model: excluded products still deflate the offered
// ones through their shadow weights v_ij. Slot 0 carries the residual mass.
inline std::vector<double> gam_probability(const Instance& inst, std::size_t i, const Assortment& s) {
  if (!inst.shadow_weights) throw ConfigError("gam_probability needs shadow weights");
  detail::check_choice_args(inst, i, s);
  std::vector<double> p(inst.m + 1, 0.0);
  double denom = inst.w0[i];
  for (auto j : s.ids()) denom += inst.weights.at(i, j);
  inst.shadow_weights->for_each_stored(i, [&](std::size_t j, double v) {
    if (!s.contains(j)) denom += v;
  });
  double bought = 0.0;
  for (auto j : s.ids()) {
    p[j + 1] = inst.weights.at(i, j) / denom;
    bought += p[j + 1];
  }
  p[0] = 1.0 - bought;
  return p;
}

// Probability vector under the instance's choice model.
inline std::vector<double> choice_probability(const Instance& inst, std::size_t i, const Assortment& s) {
  return inst.has_shadow() ? gam_probability(inst, i, s) : mnl_probability(inst, i, s);
}

// Outcome of one simulated choice: kNoPurchase or a product index.
inline constexpr std::size_t kNoPurchase = static_cast<std::size_t>(-1);

// Inverse-CDF draw over (no-purchase, s in ascending order).
inline std::size_t sample_choice(const Instance& inst, std::size_t i, const Assortment& s, Rng& rng) {
  if (s.empty()) {
    detail::check_choice_args(inst, i, s);
    return kNoPurchase;
  }
  const auto p = choice_probability(inst, i, s);
  const double u = rng.uniform();
  double cdf = p[0];
  if (u < cdf) return kNoPurchase;
  for (auto j : s.ids()) {
    cdf += p[j + 1];
    if (u < cdf) return j;
  }
  // Rounding left u above the accumulated mass; fall back to the last offer.
  return s.ids().back();
}

}  // namespace spfom
