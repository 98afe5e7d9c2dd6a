#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spfom/choice.hpp"
#include "spfom/error.hpp"
#include "spfom/inner.hpp"
#include "spfom/instance.hpp"

// Exact small-scale oracles. Everything here is deliberately simple and
// independent of the SPFOM code paths it is used to check.
namespace spfom::reference {

struct SparseColumn {
  std::vector<std::pair<std::uint32_t, double>> entries;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

// Primal simplex on  max c'x  s.t.  A x = b, x >= 0, b >= 0  with an
// explicit dense basis inverse. Pricing is largest reduced cost, switching to
// Bland's rule while pivots stay degenerate. Columns may be appended
// between solves (column generation); the current basis stays valid.
class RevisedSimplex {
 public:
  explicit RevisedSimplex(std::vector<double> rhs) : rhs_(std::move(rhs)) {
    for (double b : rhs_) {
      if (!(b >= 0.0)) throw DomainError("right-hand side must be >= 0");
    }
    basis_.assign(rhs_.size(), kNone);
  }

  std::size_t rows() const { return rhs_.size(); }
  std::size_t cols() const { return cols_.size(); }

  std::size_t add_column(SparseColumn col, double cost, bool artificial = false) {
    for (const auto& [r, v] : col.entries) {
      if (r >= rows()) throw StructuralError("column entry row out of range");
      (void)v;
    }
    cols_.push_back(std::move(col));
    cost_.push_back(cost);
    artificial_.push_back(artificial);
    position_.push_back(kNone);
    return cols_.size() - 1;
  }

  // Declares column `c` basic in row `r`; the column must be the unit vector
  // e_r. Once every row has a basic column the basis inverse is the identity.
  void set_initial_basic(std::size_t r, std::size_t c) {
    const auto& e = cols_.at(c).entries;
    if (e.size() != 1 || e[0].first != r || e[0].second != 1.0) {
      throw StructuralError("initial basic column must be a unit vector");
    }
    basis_.at(r) = c;
    position_[c] = r;
  }

  // Runs phase 1 (if any artificial is basic) and phase 2.
  LpStatus solve() {
    start();
    bool has_artificial = false;
    for (auto c : basis_) has_artificial = has_artificial || artificial_[c];
    if (has_artificial) {
      std::vector<double> phase1(cols(), 0.0);
      for (std::size_t c = 0; c < cols(); ++c) phase1[c] = artificial_[c] ? -1.0 : 0.0;
      const auto st = iterate(phase1, false);
      if (st != LpStatus::kOptimal) throw NumericalError("phase 1 reported unbounded");
      double infeas = 0.0;
      for (std::size_t r = 0; r < rows(); ++r) {
        if (artificial_[basis_[r]]) infeas += xb_[r];
      }
      if (infeas > 1e-8 * (1.0 + max_rhs())) return LpStatus::kInfeasible;
      drive_out_artificials();
    }
    return iterate(cost_, true);
  }

  // Re-optimizes after columns were appended, keeping the current basis.
  LpStatus resolve() {
    if (binv_.empty()) return solve();
    return iterate(cost_, true);
  }

  double objective() const {
    double v = 0.0;
    for (std::size_t r = 0; r < rows(); ++r) v += cost_[basis_[r]] * xb_[r];
    return v;
  }

  std::vector<double> primal() const {
    std::vector<double> x(cols(), 0.0);
    for (std::size_t r = 0; r < rows(); ++r) x[basis_[r]] = xb_[r];
    return x;
  }

  // Row prices pi = c_B' B^-1.
  std::vector<double> duals() const { return prices(cost_); }

  double reduced_cost(std::size_t c) const {
    const auto pi = duals();
    return cost_[c] - dot(pi, cols_[c]);
  }

  std::size_t pivots() const { return pivots_; }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  static constexpr double kCostTol = 1e-9;
  static constexpr double kPivotTol = 1e-9;
  static constexpr std::size_t kRefactorEvery = 100;
  static constexpr std::size_t kBlandAfter = 20;

  double max_rhs() const {
    double m = 0.0;
    for (double b : rhs_) m = std::max(m, b);
    return m;
  }

  static double dot(const std::vector<double>& pi, const SparseColumn& col) {
    double s = 0.0;
    for (const auto& [r, v] : col.entries) s += pi[r] * v;
    return s;
  }

  // Column-major: binv_[k * R + r] = (B^-1)_{r k}.
  double& binv(std::size_t r, std::size_t k) { return binv_[k * rows() + r]; }
  double binv(std::size_t r, std::size_t k) const { return binv_[k * rows() + r]; }

  void start() {
    for (std::size_t r = 0; r < rows(); ++r) {
      if (basis_[r] == kNone) throw StructuralError("row " + std::to_string(r) + " has no initial basic column");
    }
    const std::size_t R = rows();
    binv_.assign(R * R, 0.0);
    for (std::size_t r = 0; r < R; ++r) binv(r, r) = 1.0;
    xb_ = rhs_;
  }

  std::vector<double> prices(const std::vector<double>& cost) const {
    const std::size_t R = rows();
    std::vector<double> pi(R, 0.0);
    for (std::size_t k = 0; k < R; ++k) {
      double s = 0.0;
      const double* col = &binv_[k * R];
      for (std::size_t r = 0; r < R; ++r) s += cost[basis_[r]] * col[r];
      pi[k] = s;
    }
    return pi;
  }

  std::vector<double> ftran(const SparseColumn& col) const {
    const std::size_t R = rows();
    std::vector<double> u(R, 0.0);
    for (const auto& [k, v] : col.entries) {
      const double* bcol = &binv_[k * R];
      for (std::size_t r = 0; r < R; ++r) u[r] += v * bcol[r];
    }
    return u;
  }

  void pivot(std::size_t p, std::size_t entering, const std::vector<double>& u) {
    const std::size_t R = rows();
    const double theta = xb_[p] / u[p];
    for (std::size_t r = 0; r < R; ++r) {
      if (r != p) xb_[r] -= theta * u[r];
    }
    xb_[p] = theta;
    for (std::size_t k = 0; k < R; ++k) {
      double* col = &binv_[k * R];
      const double e = col[p] / u[p];
      if (e == 0.0) continue;
      for (std::size_t r = 0; r < R; ++r) col[r] -= u[r] * e;
      col[p] = e;
    }
    position_[basis_[p]] = kNone;
    basis_[p] = entering;
    position_[entering] = p;
    ++pivots_;
    if (pivots_ % kRefactorEvery == 0) refactor();
  }

  // Rebuilds B^-1 from the basic columns by Gauss-Jordan elimination with
  // partial pivoting and recomputes the basic values.
  void refactor() {
    const std::size_t R = rows();
    std::vector<double> a(R * R, 0.0);  // row-major B
    std::vector<double> inv(R * R, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
      for (const auto& [k, v] : cols_[basis_[r]].entries) a[k * R + r] = v;
      inv[r * R + r] = 1.0;
    }
    double max_piv = 0.0;
    double min_piv = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < R; ++c) {
      std::size_t best = c;
      for (std::size_t r = c + 1; r < R; ++r) {
        if (std::abs(a[r * R + c]) > std::abs(a[best * R + c])) best = r;
      }
      const double pv = a[best * R + c];
      max_piv = std::max(max_piv, std::abs(pv));
      min_piv = std::min(min_piv, std::abs(pv));
      if (std::abs(pv) < 1e-12) {
        std::ostringstream os;
        os << "basis matrix is singular at column " << c << " (pivot " << pv << ", pivot ratio "
           << (min_piv > 0.0 ? max_piv / min_piv : std::numeric_limits<double>::infinity()) << ")";
        throw NumericalError(os.str());
      }
      if (best != c) {
        for (std::size_t k = 0; k < R; ++k) {
          std::swap(a[best * R + k], a[c * R + k]);
          std::swap(inv[best * R + k], inv[c * R + k]);
        }
      }
      for (std::size_t k = 0; k < R; ++k) {
        a[c * R + k] /= pv;
        inv[c * R + k] /= pv;
      }
      for (std::size_t r = 0; r < R; ++r) {
        if (r == c) continue;
        const double f = a[r * R + c];
        if (f == 0.0) continue;
        for (std::size_t k = 0; k < R; ++k) {
          a[r * R + k] -= f * a[c * R + k];
          inv[r * R + k] -= f * inv[c * R + k];
        }
      }
    }
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t k = 0; k < R; ++k) binv(r, k) = inv[r * R + k];
    }
    for (std::size_t r = 0; r < R; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < R; ++k) s += binv(r, k) * rhs_[k];
      xb_[r] = std::max(0.0, s);
    }
  }

  LpStatus iterate(const std::vector<double>& cost, bool bar_artificial) {
    const std::size_t guard = 50 * (rows() + cols()) + 100000;
    std::size_t degenerate_run = 0;
    for (std::size_t step = 0; step < guard; ++step) {
      const auto pi = prices(cost);
      // Largest reduced cost enters; during a run of degenerate pivots Bland's
      // lowest-index rule takes over, which rules out cycling.
      const bool bland = degenerate_run >= kBlandAfter;
      std::size_t entering = kNone;
      double best_gain = kCostTol;
      for (std::size_t c = 0; c < cols(); ++c) {
        if (position_[c] != kNone) continue;
        if (bar_artificial && artificial_[c]) continue;
        const double gain = cost[c] - dot(pi, cols_[c]);
        if (gain > best_gain) {
          entering = c;
          if (bland) break;
          best_gain = gain;
        }
      }
      if (entering == kNone) return LpStatus::kOptimal;
      const auto u = ftran(cols_[entering]);
      std::size_t leave = kNone;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows(); ++r) {
        if (u[r] <= kPivotTol) continue;
        const double ratio = std::max(0.0, xb_[r]) / u[r];
        // Ties go to the lowest-index basic variable.
        if (ratio < best - 1e-12 || (ratio <= best + 1e-12 && leave != kNone && basis_[r] < basis_[leave])) {
          if (ratio < best) best = ratio;
          leave = r;
        }
      }
      if (leave == kNone) return LpStatus::kUnbounded;
      degenerate_run = best * u[leave] <= kPivotTol * (1.0 + max_rhs()) ? degenerate_run + 1 : 0;
      pivot(leave, entering, u);
    }
    throw NumericalError("simplex exceeded its pivot budget");
  }

  // After phase 1, swaps zero-valued artificials out of the basis where some
  // structural column can replace them; rows where none can are redundant.
  void drive_out_artificials() {
    for (std::size_t r = 0; r < rows(); ++r) {
      if (!artificial_[basis_[r]]) continue;
      for (std::size_t c = 0; c < cols(); ++c) {
        if (position_[c] != kNone || artificial_[c]) continue;
        double ur = 0.0;
        for (const auto& [k, v] : cols_[c].entries) ur += binv(r, k) * v;
        if (std::abs(ur) > 1e-7) {
          const auto u = ftran(cols_[c]);
          xb_[r] = 0.0;
          pivot(r, c, u);
          break;
        }
      }
    }
  }

  std::vector<double> rhs_;
  std::vector<SparseColumn> cols_;
  std::vector<double> cost_;
  std::vector<bool> artificial_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> position_;
  std::vector<double> binv_;
  std::vector<double> xb_;
  std::size_t pivots_ = 0;
};

// Dense equality-form LP  max c'x  s.t.  A x = b, x >= 0. Rows that own a
// slack column start with it in the basis; the rest get artificials.
struct StandardFormLP {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // row-major rows x cols
  std::vector<double> rhs;
  std::vector<double> cost;
  std::vector<std::optional<std::size_t>> slack_of_row;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  StandardFormLP(std::size_t r, std::size_t c)
      : rows(r), cols(c), a(r * c, 0.0), rhs(r, 0.0), cost(c, 0.0), slack_of_row(r), row_labels(r), col_labels(c) {}

  double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  // True when every declared slack column is the unit vector of its row.
  bool slack_block_is_identity() const {
    for (std::size_t r = 0; r < rows; ++r) {
      if (!slack_of_row[r]) continue;
      const std::size_t s = *slack_of_row[r];
      for (std::size_t k = 0; k < rows; ++k) {
        if (at(k, s) != (k == r ? 1.0 : 0.0)) return false;
      }
    }
    return true;
  }
};

struct LpSolution {
  LpStatus status = LpStatus::kOptimal;
  double objective = 0.0;
  std::vector<double> x;
  std::vector<double> row_duals;
  // max over structural columns of the reduced cost (<= tolerance at an optimum)
  double max_reduced_cost = 0.0;
  std::size_t pivots = 0;
};

inline LpSolution solve_lp(const StandardFormLP& lp) {
  if (!lp.slack_block_is_identity()) throw StructuralError("slack columns must form an identity block");
  RevisedSimplex sx(lp.rhs);
  for (std::size_t c = 0; c < lp.cols; ++c) {
    SparseColumn col;
    for (std::size_t r = 0; r < lp.rows; ++r) {
      if (lp.at(r, c) != 0.0) col.entries.push_back({static_cast<std::uint32_t>(r), lp.at(r, c)});
    }
    sx.add_column(std::move(col), lp.cost[c]);
  }
  for (std::size_t r = 0; r < lp.rows; ++r) {
    if (lp.slack_of_row[r]) {
      sx.set_initial_basic(r, *lp.slack_of_row[r]);
    } else {
      const auto c = sx.add_column(SparseColumn{{{static_cast<std::uint32_t>(r), 1.0}}}, 0.0, true);
      sx.set_initial_basic(r, c);
    }
  }
  LpSolution out;
  out.status = sx.solve();
  out.pivots = sx.pivots();
  if (out.status != LpStatus::kOptimal) return out;
  out.objective = sx.objective();
  auto x = sx.primal();
  x.resize(lp.cols);
  out.x = std::move(x);
  out.row_duals = sx.duals();
  out.max_reduced_cost = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < lp.cols; ++c) out.max_reduced_cost = std::max(out.max_reduced_cost, sx.reduced_cost(c));
  return out;
}

// Sales-based LP in equality form over a resource layer: row l caps
// sum_ij usage(l, j) y_ij by capacity[l]. Columns: y_ij (i-major, j = 0..m),
// then resource slacks, then ratio slacks t_ij. Rows: resource l, balance i,
// ratio (i, j).
template <class Usage>
StandardFormLP build_sales_lp(const Instance& inst, std::size_t L, Usage usage, const std::vector<double>& capacity) {
  const std::size_t n = inst.n;
  const std::size_t m = inst.m;
  const std::size_t ny = n * (m + 1);
  StandardFormLP lp(L + n + n * m, ny + L + n * m);
  auto ycol = [&](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      lp.col_labels[ycol(i, j)] = "y[" + std::to_string(i) + "," + std::to_string(j) + "]";
      if (j > 0) lp.cost[ycol(i, j)] = inst.prices[j - 1];
    }
  }
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t s = ny + l;
    lp.row_labels[l] = "capacity[" + std::to_string(l) + "]";
    lp.col_labels[s] = "slack_capacity[" + std::to_string(l) + "]";
    for (std::size_t j = 0; j < m; ++j) {
      const double u = usage(l, j);
      if (u == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) lp.at(l, ycol(i, j + 1)) = u;
    }
    lp.at(l, s) = 1.0;
    lp.rhs[l] = capacity[l];
    lp.slack_of_row[l] = s;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = L + i;
    lp.row_labels[r] = "balance[" + std::to_string(i) + "]";
    for (std::size_t j = 0; j <= m; ++j) lp.at(r, ycol(i, j)) = 1.0;
    lp.rhs[r] = inst.lambdas[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t r = L + n + i * m + j;
      const std::size_t t = ny + L + i * m + j;
      lp.row_labels[r] = "ratio[" + std::to_string(i) + "," + std::to_string(j) + "]";
      lp.col_labels[t] = "slack_ratio[" + std::to_string(i) + "," + std::to_string(j) + "]";
      lp.at(r, ycol(i, j + 1)) = 1.0;
      lp.at(r, ycol(i, 0)) = -inst.weights.at(i, j) / inst.w0[i];
      lp.at(r, t) = 1.0;
      lp.slack_of_row[r] = t;
    }
  }
  return lp;
}

inline StandardFormLP build_sblp_lp(const Instance& inst) {
  return build_sales_lp(
      inst, inst.m, [](std::size_t l, std::size_t j) { return l == j ? 1.0 : 0.0; }, inst.capacities);
}

struct SblpOptimum {
  double objective = 0.0;
  // y[i] = [y_i0, y_i1, ..., y_im]
  std::vector<std::vector<double>> y;
  DualPrices duals;
  std::size_t pivots = 0;
  bool decomposed = false;
};

// Rows above this use the decomposition path.
inline constexpr std::size_t kDirectRowLimit = 700;

inline SblpOptimum solve_sales_lp(const Instance& inst, const StandardFormLP& lp, std::size_t L) {
  const auto sol = solve_lp(lp);
  if (sol.status != LpStatus::kOptimal) throw NumericalError("SBLP simplex did not reach an optimum");
  SblpOptimum out;
  out.objective = sol.objective;
  out.pivots = sol.pivots;
  out.y.assign(inst.n, std::vector<double>(inst.m + 1, 0.0));
  for (std::size_t i = 0; i < inst.n; ++i) {
    for (std::size_t j = 0; j <= inst.m; ++j) out.y[i][j] = sol.x[i * (inst.m + 1) + j];
  }
  out.duals.eta.assign(sol.row_duals.begin(), sol.row_duals.begin() + static_cast<std::ptrdiff_t>(L));
  for (auto& e : out.duals.eta) e = std::max(0.0, e);
  return out;
}

inline SblpOptimum solve_sblp_direct(const Instance& inst) { return solve_sales_lp(inst, build_sblp_lp(inst), inst.m); }

// Column generation over assortment columns x_i(S) (the choice-based form of
// the same LP). Pricing uses the classical result that under MNL a
// revenue-ordered assortment maximizes sum_j pi_j(S) a_j, so only prefixes of
// the products sorted by a_j = r_j - eta_j need to be checked.
inline SblpOptimum solve_sblp_decomposed(const Instance& inst) {
  const std::size_t n = inst.n;
  const std::size_t m = inst.m;
  std::vector<double> rhs(m + n);
  for (std::size_t j = 0; j < m; ++j) rhs[j] = inst.capacities[j];
  for (std::size_t i = 0; i < n; ++i) rhs[m + i] = inst.lambdas[i];
  RevisedSimplex sx(std::move(rhs));

  struct ColumnInfo {
    std::size_t customer;
    std::vector<double> probs;  // mnl_probability output
  };
  std::vector<std::optional<ColumnInfo>> info;

  for (std::size_t j = 0; j < m; ++j) {
    const auto c = sx.add_column(SparseColumn{{{static_cast<std::uint32_t>(j), 1.0}}}, 0.0);
    sx.set_initial_basic(j, c);
    info.emplace_back();
  }
  auto add_assortment = [&](std::size_t i, const Assortment& s) {
    auto p = mnl_probability(inst, i, s);
    SparseColumn col;
    double revenue = 0.0;
    for (auto j : s.ids()) {
      if (p[j + 1] != 0.0) col.entries.push_back({static_cast<std::uint32_t>(j), p[j + 1]});
      revenue += inst.prices[j] * p[j + 1];
    }
    col.entries.push_back({static_cast<std::uint32_t>(m + i), 1.0});
    const auto c = sx.add_column(std::move(col), revenue);
    info.push_back(ColumnInfo{i, std::move(p)});
    return c;
  };
  for (std::size_t i = 0; i < n; ++i) sx.set_initial_basic(m + i, add_assortment(i, Assortment{}));

  if (sx.solve() != LpStatus::kOptimal) throw NumericalError("restricted master did not reach an optimum");
  for (;;) {
    const auto pi = sx.duals();
    std::vector<double> a(m);
    for (std::size_t j = 0; j < m; ++j) a[j] = inst.prices[j] - pi[j];
    std::vector<std::size_t> order(m);
    for (std::size_t j = 0; j < m; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x] > a[y]; });
    std::size_t added = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = 0.0;
      std::size_t best_len = 0;
      std::vector<std::size_t> prefix;
      for (std::size_t k = 0; k < m && a[order[k]] > 0.0; ++k) {
        prefix.push_back(order[k]);
        const auto p = mnl_probability(inst, i, Assortment(prefix));
        double v = 0.0;
        for (auto j : prefix) v += a[j] * p[j + 1];
        if (v > best) {
          best = v;
          best_len = prefix.size();
        }
      }
      const double reduced = best - pi[m + i];
      if (best_len > 0 && reduced > 1e-9 * (1.0 + std::abs(best))) {
        prefix.resize(best_len);
        add_assortment(i, Assortment(prefix));
        ++added;
      }
    }
    if (added == 0) break;
    if (sx.resolve() != LpStatus::kOptimal) throw NumericalError("restricted master did not reach an optimum");
  }

  SblpOptimum out;
  out.decomposed = true;
  out.objective = sx.objective();
  out.pivots = sx.pivots();
  out.y.assign(n, std::vector<double>(m + 1, 0.0));
  const auto x = sx.primal();
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (!info[c] || x[c] == 0.0) continue;
    const auto& ci = *info[c];
    for (std::size_t j = 0; j <= m; ++j) out.y[ci.customer][j] += x[c] * ci.probs[j];
  }
  const auto pi = sx.duals();
  out.duals.eta.assign(pi.begin(), pi.begin() + static_cast<std::ptrdiff_t>(m));
  for (auto& e : out.duals.eta) e = std::max(0.0, e);
  return out;
}

// Exact SBLP optimum with capacity duals. Shadow weights, if present, are
// ignored: the LP is the MNL sales-based form.
inline SblpOptimum simplex_solve_sblp(const Instance& inst) {
  require_valid(inst);
  if (inst.n > 1000 || inst.m > 20) throw UsageError("simplex oracle is limited to n <= 1000 and m <= 20");
  if (inst.m + inst.n + inst.n * inst.m <= kDirectRowLimit) return solve_sblp_direct(inst);
  return solve_sblp_decomposed(inst);
}

// Bundle LP: resource rows sum_ij B_lj y_ij <= c_l replace the per-product
// capacity rows. Duals are per resource.
inline SblpOptimum simplex_solve_bundle_lp(const BundleInstance& binst) {
  const auto rep = validate(binst);
  if (!rep.ok()) throw DomainError(rep.summary());
  const Instance& inst = binst.base;
  if (binst.L + inst.n + inst.n * inst.m > 4000) throw UsageError("bundle LP oracle is limited to small instances");
  const auto lp = build_sales_lp(
      inst, binst.L, [&](std::size_t l, std::size_t j) { return static_cast<double>(binst.at(l, j)); },
      binst.resource_capacities);
  return solve_sales_lp(inst, lp, binst.L);
}

struct CblpOptimum {
  double objective = 0.0;
  // x[i][mask]: time customer i is offered the set encoded by bit mask.
  std::vector<std::vector<double>> x;
};

inline Assortment assortment_from_mask(std::size_t mask, std::size_t m) {
  std::vector<std::size_t> ids;
  for (std::size_t j = 0; j < m; ++j) {
    if (mask & (std::size_t{1} << j)) ids.push_back(j);
  }
  return Assortment(std::move(ids));
}

// Full choice-based LP with one column per (customer, assortment).
inline CblpOptimum cblp_enumerate_solve(const Instance& inst) {
  require_valid(inst);
  if (inst.m > 4 || inst.n > 50) throw UsageError("assortment enumeration is limited to m <= 4 and n <= 50");
  const std::size_t n = inst.n;
  const std::size_t m = inst.m;
  const std::size_t sets = std::size_t{1} << m;
  const std::size_t nx = n * sets;
  StandardFormLP lp(m + n, nx + m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t mask = 0; mask < sets; ++mask) {
      const std::size_t c = i * sets + mask;
      const auto p = mnl_probability(inst, i, assortment_from_mask(mask, m));
      for (std::size_t j = 0; j < m; ++j) {
        lp.at(j, c) = p[j + 1];
        lp.cost[c] += inst.prices[j] * p[j + 1];
      }
      lp.at(m + i, c) = 1.0;
      lp.col_labels[c] = "x[" + std::to_string(i) + "," + std::to_string(mask) + "]";
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    lp.at(j, nx + j) = 1.0;
    lp.rhs[j] = inst.capacities[j];
    lp.slack_of_row[j] = nx + j;
  }
  for (std::size_t i = 0; i < n; ++i) lp.rhs[m + i] = inst.lambdas[i];
  const auto sol = solve_lp(lp);
  if (sol.status != LpStatus::kOptimal) throw NumericalError("choice-based LP did not reach an optimum");
  CblpOptimum out;
  out.objective = sol.objective;
  out.x.assign(n, std::vector<double>(sets, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t mask = 0; mask < sets; ++mask) out.x[i][mask] = sol.x[i * sets + mask];
  }
  return out;
}

// Fixed-y0 inner LP solved by simplex: max sum_j y_j a_j subject to
// sum_j y_j = lambda - y0 and 0 <= y_j <= w_j y0 / w0.
inline InnerSolution inner_bruteforce(const Instance& inst, std::size_t i, double y0, const DualPrices& duals) {
  if (i >= inst.n) throw UsageError("customer index " + std::to_string(i) + " out of range");
  if (inst.m > 10) throw UsageError("brute-force inner solver is limited to m <= 10");
  if (duals.eta.size() != inst.m) throw StructuralError("dual vector must have length m");
  const std::size_t m = inst.m;
  const double lambda = inst.lambdas[i];
  if (y0 > lambda * (1.0 + 1e-12)) throw UsageError("no-purchase level exceeds lambda");
  const double budget = std::max(0.0, lambda - y0);
  double cap_total = 0.0;
  for (std::size_t j = 0; j < m; ++j) cap_total += inst.weights.at(i, j) * y0 / inst.w0[i];
  if (cap_total < budget - 1e-12 * lambda) {
    std::ostringstream os;
    os << "infeasible no-purchase level: caps sum to " << cap_total << " < budget " << budget;
    throw InfeasibleError(os.str());
  }
  // Columns y_1..y_m, then cap slacks. Row 0: budget; rows 1..m: caps.
  StandardFormLP lp(1 + m, 2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    lp.at(0, j) = 1.0;
    lp.at(1 + j, j) = 1.0;
    lp.at(1 + j, m + j) = 1.0;
    lp.rhs[1 + j] = inst.weights.at(i, j) * y0 / inst.w0[i];
    lp.slack_of_row[1 + j] = m + j;
    lp.cost[j] = inst.prices[j] - duals.eta[j];
  }
  lp.rhs[0] = budget;
  auto sol = solve_lp(lp);
  if (sol.status == LpStatus::kInfeasible) {
    // Caps cover the budget only up to rounding; scale the caps up by the
    // shortfall so the certificate above stays the single source of refusal.
    for (std::size_t j = 0; j < m; ++j) lp.rhs[1 + j] *= 1.0 + 1e-11;
    sol = solve_lp(lp);
    if (sol.status != LpStatus::kOptimal) throw InfeasibleError("inner LP infeasible");
  }
  InnerSolution out;
  out.y_row.assign(m + 1, 0.0);
  out.y_row[0] = y0;
  for (std::size_t j = 0; j < m; ++j) out.y_row[j + 1] = sol.x[j];
  out.value = sol.objective;
  return out;
}

}  // namespace spfom::reference
