#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "spfom/error.hpp"
#include "spfom/instance.hpp"
#include "spfom/rng.hpp"
#include "spfom/solver.hpp"

namespace spfom {

// One dual per base resource.
struct ResourceDuals {
  std::vector<double> eta;
};

inline void require_valid(const BundleInstance& binst) {
  const auto rep = validate(binst);
  if (!rep.ok()) throw DomainError(rep.summary());
}

inline ResourceLayer resource_layer(const BundleInstance& binst) {
  ResourceLayer layer;
  layer.L = binst.L;
  layer.resources_of_product.resize(binst.base.m);
  for (std::size_t j = 0; j < binst.base.m; ++j) {
    for (std::size_t l = 0; l < binst.L; ++l) {
      if (binst.at(l, j)) layer.resources_of_product[j].push_back(static_cast<std::uint32_t>(l));
    }
  }
  layer.capacities = binst.resource_capacities;
  return layer;
}

// r_j - (B^T eta)_j
inline std::vector<double> effective_bundle_coefficients(const BundleInstance& binst, const ResourceDuals& duals) {
  if (duals.eta.size() != binst.L) throw StructuralError("resource duals must have length L");
  if (binst.incidence.size() != binst.L * binst.base.m) throw StructuralError("incidence must be L x m");
  return resource_layer(binst).coefficients(binst.base.prices, DualPrices{duals.eta});
}

// Augmented constraint matrix of the bundle LP in equality form.
// Columns: y_i = (y_i0, ..., y_im) for each customer, then L resource
// slacks, then n*m ratio slacks. Rows: L resource rows, n demand rows,
// n*m ratio rows y_ij - (w_ij / w_i0) y_i0 + s_ij = 0.
class AugmentedMatrix {
 public:
  explicit AugmentedMatrix(const BundleInstance& binst) : b_(binst) {
    if (binst.incidence.size() != binst.L * binst.base.m) throw StructuralError("incidence must be L x m");
  }

  std::size_t rows() const { return b_.L + n() + n() * m(); }
  std::size_t cols() const { return n() * (m() + 1) + b_.L + n() * m(); }

  // out = A x
  void multiply(const std::vector<double>& x, std::vector<double>& out) const {
    out.assign(rows(), 0.0);
    const std::size_t L = b_.L;
    const std::size_t slack0 = n() * (m() + 1);
    for (std::size_t l = 0; l < L; ++l) {
      double s = x[slack0 + l];
      for (std::size_t i = 0; i < n(); ++i) {
        for (std::size_t j = 0; j < m(); ++j) {
          if (b_.at(l, j)) s += x[ycol(i, j + 1)];
        }
      }
      out[l] = s;
    }
    for (std::size_t i = 0; i < n(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j <= m(); ++j) s += x[ycol(i, j)];
      out[L + i] = s;
    }
    const std::size_t ratio_slack0 = slack0 + L;
    for (std::size_t i = 0; i < n(); ++i) {
      const double y0 = x[ycol(i, 0)];
      for (std::size_t j = 0; j < m(); ++j) {
        const std::size_t k = i * m() + j;
        out[L + n() + k] = x[ycol(i, j + 1)] - ratio(i, j) * y0 + x[ratio_slack0 + k];
      }
    }
  }

  // out = A^T v
  void multiply_transpose(const std::vector<double>& v, std::vector<double>& out) const {
    out.assign(cols(), 0.0);
    const std::size_t L = b_.L;
    const std::size_t slack0 = n() * (m() + 1);
    const std::size_t ratio_slack0 = slack0 + L;
    std::vector<double> per_product(m(), 0.0);
    for (std::size_t j = 0; j < m(); ++j) {
      for (std::size_t l = 0; l < L; ++l) {
        if (b_.at(l, j)) per_product[j] += v[l];
      }
    }
    for (std::size_t i = 0; i < n(); ++i) {
      const double demand = v[L + i];
      double y0 = demand;
      for (std::size_t j = 0; j < m(); ++j) {
        const double r = v[L + n() + i * m() + j];
        out[ycol(i, j + 1)] = per_product[j] + demand + r;
        y0 -= ratio(i, j) * r;
      }
      out[ycol(i, 0)] = y0;
    }
    for (std::size_t l = 0; l < L; ++l) out[slack0 + l] = v[l];
    for (std::size_t k = 0; k < n() * m(); ++k) out[ratio_slack0 + k] = v[L + n() + k];
  }

  // Row-major dense copy (small instances only).
  std::vector<double> dense() const {
    std::vector<double> a(rows() * cols(), 0.0);
    std::vector<double> e(cols(), 0.0);
    std::vector<double> col;
    for (std::size_t c = 0; c < cols(); ++c) {
      e[c] = 1.0;
      multiply(e, col);
      for (std::size_t r = 0; r < rows(); ++r) a[r * cols() + c] = col[r];
      e[c] = 0.0;
    }
    return a;
  }

 private:
  std::size_t n() const { return b_.base.n; }
  std::size_t m() const { return b_.base.m; }
  std::size_t ycol(std::size_t i, std::size_t j) const { return i * (m() + 1) + j; }
  double ratio(std::size_t i, std::size_t j) const { return b_.base.weights.at(i, j) / b_.base.w0[i]; }

  const BundleInstance& b_;
};

struct SpectralNorm {
  double rho_max = 0.0;
  int iterations = 0;
};

// Largest singular value of the augmented matrix by power iteration on
// A A^T, stopping when the eigenvalue estimate changes by less than
// tol relative.
inline SpectralNorm augmented_spectral_norm(const BundleInstance& binst, double tol = 1e-8, int max_iters = 10000,
                                            std::uint64_t seed = 0) {
  const AugmentedMatrix a(binst);
  Rng rng(seed, Stream::kPowerIteration);
  std::vector<double> v(a.rows());
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  auto normalize = [](std::vector<double>& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    s = std::sqrt(s);
    for (auto& e : x) e /= s;
    return s;
  };
  normalize(v);
  std::vector<double> u;
  double prev = 0.0;
  double change = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    a.multiply_transpose(v, u);
    a.multiply(u, v);
    const double lambda = normalize(v);
    change = std::abs(lambda - prev) / lambda;
    if (it > 1 && change < tol) return {std::sqrt(lambda), it};
    prev = lambda;
  }
  std::ostringstream os;
  os << "power iteration did not converge in " << max_iters << " iterations (last relative change " << change
     << ", estimate " << std::sqrt(prev) << ")";
  throw NumericalError(os.str());
}

// rho_max^2 / (2 R_tilde)
inline double bundle_mu_bound(const BundleInstance& binst, double R_tilde) {
  if (!(R_tilde > 0.0)) throw ConfigError("R_tilde must be > 0");
  const double rho = augmented_spectral_norm(binst).rho_max;
  return rho * rho / (2.0 * R_tilde);
}

// Twice the largest coefficient sum sum_j (r_j - (B^T eta)_j) seen during a
// run: a working stand-in for the bound R_tilde.
inline double estimate_R_tilde(const SolveReport& report) {
  if (!(report.max_coefficient_sum > 0.0)) throw ConfigError("coefficient sums never positive: supply R_tilde");
  return 2.0 * report.max_coefficient_sum;
}

// SPFOM with resource duals: coefficients r_j - (B^T eta)_j, resource usage
// maintained incrementally, one dual per resource.
inline SolveReport spfom_solve_bundle(const BundleInstance& binst, const SolverParams& params) {
  require_valid(binst);
  return detail::run_spfom(binst.base, resource_layer(binst), params, params.workers);
}

}  // namespace spfom
