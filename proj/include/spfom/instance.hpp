#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spfom/error.hpp"
#include "spfom/rng.hpp"

namespace spfom {

// n x m nonnegative matrix stored either dense row-major or as sorted sparse
// rows (CSR). All consumers go through the row visitors, so both layouts are
// interchangeable.
class WeightMatrix {
 public:
  struct Entry {
    std::uint32_t product;
    double weight;
  };

  WeightMatrix() = default;

  static WeightMatrix dense(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols) {
      throw StructuralError("dense weight matrix: expected " + std::to_string(rows * cols) +
                            " values, got " + std::to_string(values.size()));
    }
    WeightMatrix w;
    w.rows_ = rows;
    w.cols_ = cols;
    w.sparse_ = false;
    w.values_ = std::move(values);
    return w;
  }

  static WeightMatrix sparse(std::size_t rows, std::size_t cols,
                             const std::vector<std::vector<Entry>>& row_entries) {
    if (row_entries.size() != rows) {
      throw StructuralError("sparse weight matrix: expected " + std::to_string(rows) + " rows, got " +
                            std::to_string(row_entries.size()));
    }
    WeightMatrix w;
    w.rows_ = rows;
    w.cols_ = cols;
    w.sparse_ = true;
    w.offsets_.reserve(rows + 1);
    w.offsets_.push_back(0);
    for (const auto& row : row_entries) {
      for (const auto& e : row) {
        w.products_.push_back(e.product);
        w.values_.push_back(e.weight);
      }
      w.offsets_.push_back(w.values_.size());
    }
    return w;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_sparse() const { return sparse_; }

  double at(std::size_t i, std::size_t j) const {
    if (!sparse_) return values_[i * cols_ + j];
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      if (products_[k] == j) return values_[k];
    }
    return 0.0;
  }

  // Visits every stored entry of row i (dense: all m columns), ascending j.
  template <class F>
  void for_each_stored(std::size_t i, F&& f) const {
    if (!sparse_) {
      const double* row = values_.data() + i * cols_;
      for (std::size_t j = 0; j < cols_; ++j) f(j, row[j]);
    } else {
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) f(std::size_t{products_[k]}, values_[k]);
    }
  }

  // Visits the strictly positive entries of row i, ascending j.
  template <class F>
  void for_each_nonzero(std::size_t i, F&& f) const {
    for_each_stored(i, [&](std::size_t j, double w) {
      if (w > 0.0) f(j, w);
    });
  }

  double row_sum(std::size_t i) const {
    double s = 0.0;
    for_each_nonzero(i, [&](std::size_t, double w) { s += w; });
    return s;
  }

  // Stored entries of row i as (product, weight) pairs.
  std::vector<Entry> row_entries(std::size_t i) const {
    std::vector<Entry> out;
    for_each_stored(i, [&](std::size_t j, double w) { out.push_back({static_cast<std::uint32_t>(j), w}); });
    return out;
  }

  // Dense copy of row i.
  std::vector<double> dense_row(std::size_t i) const {
    std::vector<double> out(cols_, 0.0);
    for_each_stored(i, [&](std::size_t j, double w) {
      if (j < cols_) out[j] = w;
    });
    return out;
  }

  // Layout check used by validate(): sparse rows sorted, unique, in range.
  std::vector<std::string> layout_violations(const std::string& name) const {
    std::vector<std::string> out;
    if (!sparse_) return out;
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
        if (products_[k] >= cols_) {
          out.push_back(name + " row " + std::to_string(i) + " references product " +
                        std::to_string(products_[k]) + " >= m");
        } else if (k > offsets_[i] && products_[k] <= products_[k - 1]) {
          out.push_back(name + " row " + std::to_string(i) + " entries must be sorted and unique");
        }
      }
    }
    return out;
  }

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool sparse_ = false;
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> products_;
};

// Market data of one sales-based LP: n customers, m products.
struct Instance {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> prices;
  std::vector<double> capacities;
  std::vector<double> lambdas;
  std::vector<double> w0;
  WeightMatrix weights;
  // Present => generalized attraction model for choice; absent => MNL.
  std::optional<WeightMatrix> shadow_weights;

  bool has_shadow() const { return shadow_weights.has_value(); }

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct MultiPeriodInstance {
  std::vector<Instance> periods;
  std::vector<double> initial_capacities;

  std::size_t T() const { return periods.size(); }
};

// Customers choose among m bundles; bundle j consumes one unit of every
// resource l with incidence(l, j) == 1.
struct BundleInstance {
  Instance base;
  std::size_t L = 0;
  std::vector<std::uint8_t> incidence;  // row-major L x m
  std::vector<double> resource_capacities;

  std::uint8_t at(std::size_t l, std::size_t j) const { return incidence[l * base.m + j]; }
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }

  std::string summary() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < violations.size(); ++k) {
      if (k) os << "; ";
      os << violations[k];
    }
    return os.str();
  }
};

namespace detail {

inline void check_length(ValidationReport& rep, const std::string& name, std::size_t got, std::size_t want) {
  if (got != want) {
    rep.violations.push_back(name + " has length " + std::to_string(got) + ", expected " + std::to_string(want));
  }
}

}  // namespace detail

inline ValidationReport validate(const Instance& inst) {
  ValidationReport rep;
  if (inst.n < 1) rep.violations.push_back("n must be >= 1");
  if (inst.m < 1) rep.violations.push_back("m must be >= 1");
  detail::check_length(rep, "prices", inst.prices.size(), inst.m);
  detail::check_length(rep, "capacities", inst.capacities.size(), inst.m);
  detail::check_length(rep, "lambdas", inst.lambdas.size(), inst.n);
  detail::check_length(rep, "w0", inst.w0.size(), inst.n);
  if (inst.weights.rows() != inst.n || inst.weights.cols() != inst.m) {
    rep.violations.push_back("weights must be n x m");
  }
  if (inst.shadow_weights && (inst.shadow_weights->rows() != inst.n || inst.shadow_weights->cols() != inst.m)) {
    rep.violations.push_back("shadow_weights must be n x m");
  }
  if (!rep.ok()) return rep;

  for (std::size_t j = 0; j < inst.m; ++j) {
    if (!(inst.prices[j] >= 0.0) || !std::isfinite(inst.prices[j])) {
      rep.violations.push_back("price[" + std::to_string(j) + "] must be >= 0");
    }
    if (!(inst.capacities[j] > 0.0)) {
      rep.violations.push_back("capacity[" + std::to_string(j) + "] must be > 0");
    }
  }
  for (std::size_t i = 0; i < inst.n; ++i) {
    if (!(inst.lambdas[i] > 0.0) || !std::isfinite(inst.lambdas[i])) {
      rep.violations.push_back("lambda[" + std::to_string(i) + "] must be > 0");
    }
    if (!(inst.w0[i] > 0.0) || !std::isfinite(inst.w0[i])) {
      rep.violations.push_back("w0[" + std::to_string(i) + "] must be > 0");
    }
  }
  auto check_matrix = [&](const WeightMatrix& w, const std::string& name, bool need_positive_row) {
    auto layout = w.layout_violations(name);
    rep.violations.insert(rep.violations.end(), layout.begin(), layout.end());
    if (!layout.empty()) return;
    for (std::size_t i = 0; i < inst.n; ++i) {
      bool any_positive = false;
      w.for_each_stored(i, [&](std::size_t j, double v) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          rep.violations.push_back(name + "[" + std::to_string(i) + "][" + std::to_string(j) + "] must be >= 0");
        }
        if (v > 0.0) any_positive = true;
      });
      if (need_positive_row && !any_positive) {
        rep.violations.push_back("customer " + std::to_string(i) + " has no positive product weight");
      }
    }
  };
  check_matrix(inst.weights, "weight", true);
  if (inst.shadow_weights) check_matrix(*inst.shadow_weights, "shadow_weight", false);
  return rep;
}

inline void require_valid(const Instance& inst) {
  auto rep = validate(inst);
  if (!rep.ok()) throw DomainError("invalid instance: " + rep.summary());
}

inline ValidationReport validate(const MultiPeriodInstance& mp) {
  ValidationReport rep;
  if (mp.periods.empty()) {
    rep.violations.push_back("multi-period instance needs at least one period");
    return rep;
  }
  const std::size_t m = mp.periods.front().m;
  detail::check_length(rep, "initial_capacities", mp.initial_capacities.size(), m);
  for (std::size_t j = 0; j < mp.initial_capacities.size(); ++j) {
    if (!(mp.initial_capacities[j] > 0.0)) {
      rep.violations.push_back("initial_capacity[" + std::to_string(j) + "] must be > 0");
    }
  }
  for (std::size_t t = 0; t < mp.periods.size(); ++t) {
    const auto& p = mp.periods[t];
    if (p.m != m) {
      rep.violations.push_back("period " + std::to_string(t) + " has m=" + std::to_string(p.m) + ", expected " +
                               std::to_string(m));
      continue;
    }
    if (p.prices != mp.periods.front().prices) {
      rep.violations.push_back("period " + std::to_string(t) + " prices differ from period 0");
    }
    if (p.has_shadow() != mp.periods.front().has_shadow()) {
      rep.violations.push_back("period " + std::to_string(t) + " mixes MNL and GAM customers");
    }
    for (auto& v : validate(p).violations) rep.violations.push_back("period " + std::to_string(t) + ": " + v);
  }
  return rep;
}

inline ValidationReport validate(const BundleInstance& b) {
  ValidationReport rep = validate(b.base);
  if (b.L < 1) rep.violations.push_back("L must be >= 1");
  detail::check_length(rep, "incidence", b.incidence.size(), b.L * b.base.m);
  detail::check_length(rep, "resource_capacities", b.resource_capacities.size(), b.L);
  if (!rep.ok()) return rep;
  for (std::size_t l = 0; l < b.L; ++l) {
    if (!(b.resource_capacities[l] > 0.0)) {
      rep.violations.push_back("resource_capacity[" + std::to_string(l) + "] must be > 0");
    }
  }
  for (std::size_t j = 0; j < b.base.m; ++j) {
    bool any = false;
    for (std::size_t l = 0; l < b.L; ++l) {
      const auto v = b.at(l, j);
      if (v > 1) {
        rep.violations.push_back("incidence[" + std::to_string(l) + "][" + std::to_string(j) + "] must be 0 or 1");
      }
      any = any || v == 1;
    }
    if (!any) rep.violations.push_back("bundle " + std::to_string(j) + " consumes no resource");
  }
  return rep;
}

// Closed interval bounds for one generated quantity; draws land strictly inside.
struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

struct GenerationConfig {
  Range capacity{0.0, 1.0};
  Range price{0.0, 1.0};
  Range weight{0.0, 1.0};
  // Defaults to `weight` when unset.
  std::optional<Range> no_purchase_weight;
  double lambda = 1.0;
};

inline void check_range(const Range& r, const std::string& name) {
  if (!(r.lo < r.hi) || !(r.hi > 0.0) || r.lo < 0.0 || !std::isfinite(r.hi)) {
    std::ostringstream os;
    os << name << " range [" << r.lo << ", " << r.hi << "] is invalid";
    throw ConfigError(os.str());
  }
}

// Draw order: capacities, prices, then per customer w0 followed by its m weights.
inline Instance generate_uniform(std::size_t n, std::size_t m, std::uint64_t seed,
                                 const GenerationConfig& config = {}) {
  if (n < 1 || m < 1) throw ConfigError("generate_uniform needs n >= 1 and m >= 1");
  check_range(config.capacity, "capacity");
  check_range(config.price, "price");
  check_range(config.weight, "weight");
  const Range w0_range = config.no_purchase_weight.value_or(config.weight);
  check_range(w0_range, "no-purchase weight");
  if (!(config.lambda > 0.0)) throw ConfigError("lambda must be > 0");

  Rng rng(seed, Stream::kInstance);
  Instance inst;
  inst.n = n;
  inst.m = m;
  inst.capacities.resize(m);
  inst.prices.resize(m);
  for (auto& c : inst.capacities) c = rng.uniform(config.capacity.lo, config.capacity.hi);
  for (auto& r : inst.prices) r = rng.uniform(config.price.lo, config.price.hi);
  inst.lambdas.assign(n, config.lambda);
  inst.w0.resize(n);
  std::vector<double> w(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    inst.w0[i] = rng.uniform(w0_range.lo, w0_range.hi);
    for (std::size_t j = 0; j < m; ++j) w[i * m + j] = rng.uniform(config.weight.lo, config.weight.hi);
  }
  inst.weights = WeightMatrix::dense(n, m, std::move(w));
  return inst;
}

// Concatenates the customers of all periods (period order, then customer
// order) into one instance sharing the initial capacities. The stacked LP is
// the multi-period LP: periods interact only through the shared capacity.
inline Instance stack_periods(const MultiPeriodInstance& mp) {
  if (mp.periods.empty()) throw StructuralError("stack_periods: no periods");
  const std::size_t m = mp.periods.front().m;
  for (const auto& p : mp.periods) {
    if (p.m != m) throw StructuralError("stack_periods: periods disagree on m");
    if (p.prices != mp.periods.front().prices) throw StructuralError("stack_periods: periods disagree on prices");
    if (p.has_shadow() != mp.periods.front().has_shadow()) {
      throw StructuralError("stack_periods: periods mix MNL and GAM customers");
    }
  }
  if (mp.initial_capacities.size() != m) throw StructuralError("stack_periods: initial_capacities must have length m");

  Instance out;
  out.m = m;
  out.prices = mp.periods.front().prices;
  out.capacities = mp.initial_capacities;
  bool all_dense = true;
  for (const auto& p : mp.periods) {
    out.n += p.n;
    all_dense = all_dense && !p.weights.is_sparse();
    out.lambdas.insert(out.lambdas.end(), p.lambdas.begin(), p.lambdas.end());
    out.w0.insert(out.w0.end(), p.w0.begin(), p.w0.end());
  }
  auto stack = [&](auto get) {
    if (all_dense) {
      std::vector<double> values;
      values.reserve(out.n * m);
      for (const auto& p : mp.periods) {
        for (std::size_t i = 0; i < p.n; ++i) {
          auto row = get(p).dense_row(i);
          values.insert(values.end(), row.begin(), row.end());
        }
      }
      return WeightMatrix::dense(out.n, m, std::move(values));
    }
    std::vector<std::vector<WeightMatrix::Entry>> rows;
    rows.reserve(out.n);
    for (const auto& p : mp.periods) {
      for (std::size_t i = 0; i < p.n; ++i) rows.push_back(get(p).row_entries(i));
    }
    return WeightMatrix::sparse(out.n, m, rows);
  };
  out.weights = stack([](const Instance& p) -> const WeightMatrix& { return p.weights; });
  if (mp.periods.front().has_shadow()) {
    out.shadow_weights = stack([](const Instance& p) -> const WeightMatrix& { return *p.shadow_weights; });
  }
  return out;
}

// Rows `customers` of `inst`, in the given order, as a standalone instance.
inline Instance select_customers(const Instance& inst, std::span<const std::size_t> customers,
                                 std::vector<double> capacities) {
  Instance out;
  out.n = customers.size();
  out.m = inst.m;
  out.prices = inst.prices;
  out.capacities = std::move(capacities);
  std::vector<std::vector<WeightMatrix::Entry>> rows;
  std::vector<std::vector<WeightMatrix::Entry>> shadow_rows;
  std::vector<double> dense;
  for (auto i : customers) {
    out.lambdas.push_back(inst.lambdas[i]);
    out.w0.push_back(inst.w0[i]);
    if (inst.weights.is_sparse()) {
      rows.push_back(inst.weights.row_entries(i));
    } else {
      auto row = inst.weights.dense_row(i);
      dense.insert(dense.end(), row.begin(), row.end());
    }
    if (inst.shadow_weights) shadow_rows.push_back(inst.shadow_weights->row_entries(i));
  }
  out.weights = inst.weights.is_sparse() ? WeightMatrix::sparse(out.n, out.m, rows)
                                         : WeightMatrix::dense(out.n, out.m, std::move(dense));
  if (inst.shadow_weights) out.shadow_weights = WeightMatrix::sparse(out.n, out.m, shadow_rows);
  return out;
}

// Identity incidence: each bundle is one resource with the base capacity.
inline BundleInstance identity_bundle(const Instance& inst) {
  BundleInstance b;
  b.base = inst;
  b.L = inst.m;
  b.incidence.assign(inst.m * inst.m, 0);
  for (std::size_t j = 0; j < inst.m; ++j) b.incidence[j * inst.m + j] = 1;
  b.resource_capacities = inst.capacities;
  return b;
}

}  // namespace spfom
