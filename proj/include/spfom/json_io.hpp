#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spfom/error.hpp"
#include "spfom/instance.hpp"
#include "spfom/recovery.hpp"
#include "spfom/sim.hpp"
#include "spfom/solver.hpp"

namespace spfom {

using Json = nlohmann::json;

// Unreadable or malformed input file.
class DataError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <class T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw DataError(std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("field \"") + key + "\": " + e.what());
  }
}

inline Json matrix_to_json(const WeightMatrix& w) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < w.rows(); ++i) {
    if (w.is_sparse()) {
      Json entries = Json::array();
      for (const auto& e : w.row_entries(i)) entries.push_back(Json::array({e.product, e.weight}));
      rows.push_back(Json{{"sparse", std::move(entries)}});
    } else {
      rows.push_back(w.dense_row(i));
    }
  }
  return rows;
}

// Rows are either dense arrays of length m or {"sparse": [[j, w], ...]}.
// Any sparse row makes the whole matrix sparse.
inline WeightMatrix matrix_from_json(const Json& j, std::size_t n, std::size_t m, const char* name) {
  if (!j.is_array() || j.size() != n) {
    throw DataError(std::string(name) + " must be an array of " + std::to_string(n) + " rows");
  }
  bool any_sparse = false;
  for (const auto& row : j) any_sparse = any_sparse || row.is_object();
  try {
    if (!any_sparse) {
      std::vector<double> values;
      values.reserve(n * m);
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = j[i].get<std::vector<double>>();
        if (row.size() != m) {
          throw DataError(std::string(name) + " row " + std::to_string(i) + " must have " + std::to_string(m) +
                          " entries");
        }
        values.insert(values.end(), row.begin(), row.end());
      }
      return WeightMatrix::dense(n, m, std::move(values));
    }
    std::vector<std::vector<WeightMatrix::Entry>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (j[i].is_object()) {
        for (const auto& e : j[i].at("sparse")) {
          if (!e.is_array() || e.size() != 2) throw DataError(std::string(name) + " sparse entries are [j, w] pairs");
          const auto p = e[0].get<std::int64_t>();
          if (p < 0) throw DataError(std::string(name) + " row " + std::to_string(i) + " has a negative index");
          rows[i].push_back({static_cast<std::uint32_t>(p), e[1].get<double>()});
        }
      } else {
        const auto row = j[i].get<std::vector<double>>();
        if (row.size() != m) {
          throw DataError(std::string(name) + " row " + std::to_string(i) + " must have " + std::to_string(m) +
                          " entries");
        }
        for (std::size_t c = 0; c < m; ++c) rows[i].push_back({static_cast<std::uint32_t>(c), row[c]});
      }
    }
    return WeightMatrix::sparse(n, m, rows);
  } catch (const Json::exception& e) {
    throw DataError(std::string(name) + ": " + e.what());
  }
}

}  // namespace detail

inline Json to_json(const Instance& inst) {
  Json j{{"n", inst.n},
         {"m", inst.m},
         {"prices", inst.prices},
         {"capacities", inst.capacities},
         {"lambdas", inst.lambdas},
         {"w0", inst.w0},
         {"weights", detail::matrix_to_json(inst.weights)}};
  if (inst.shadow_weights) j["shadow_weights"] = detail::matrix_to_json(*inst.shadow_weights);
  return j;
}

// Parses and validates; any defect is a DataError.
inline Instance instance_from_json(const Json& j) {
  Instance inst;
  inst.n = detail::field<std::size_t>(j, "n");
  inst.m = detail::field<std::size_t>(j, "m");
  inst.prices = detail::field<std::vector<double>>(j, "prices");
  inst.capacities = detail::field<std::vector<double>>(j, "capacities");
  inst.lambdas = detail::field<std::vector<double>>(j, "lambdas");
  inst.w0 = detail::field<std::vector<double>>(j, "w0");
  if (!j.contains("weights")) throw DataError("missing field \"weights\"");
  inst.weights = detail::matrix_from_json(j["weights"], inst.n, inst.m, "weights");
  if (j.contains("shadow_weights") && !j["shadow_weights"].is_null()) {
    inst.shadow_weights = detail::matrix_from_json(j["shadow_weights"], inst.n, inst.m, "shadow_weights");
  }
  const auto rep = validate(inst);
  if (!rep.ok()) throw DataError(rep.summary());
  return inst;
}

inline Json to_json(const MultiPeriodInstance& mp) {
  Json periods = Json::array();
  for (const auto& p : mp.periods) periods.push_back(to_json(p));
  return Json{{"periods", std::move(periods)}, {"initial_capacities", mp.initial_capacities}};
}

inline MultiPeriodInstance multi_period_from_json(const Json& j) {
  MultiPeriodInstance mp;
  if (!j.contains("periods") || !j["periods"].is_array()) throw DataError("missing array \"periods\"");
  for (const auto& p : j["periods"]) mp.periods.push_back(instance_from_json(p));
  mp.initial_capacities = detail::field<std::vector<double>>(j, "initial_capacities");
  const auto rep = validate(mp);
  if (!rep.ok()) throw DataError(rep.summary());
  return mp;
}

inline Json to_json(const BundleInstance& b) {
  Json j = to_json(b.base);
  Json incidence = Json::array();
  for (std::size_t l = 0; l < b.L; ++l) {
    std::vector<int> row(b.base.m);
    for (std::size_t c = 0; c < b.base.m; ++c) row[c] = b.at(l, c);
    incidence.push_back(row);
  }
  j["incidence"] = std::move(incidence);
  j["resource_capacities"] = b.resource_capacities;
  return j;
}

// The base instance's capacities are carried but unused by bundle solves.
inline BundleInstance bundle_from_json(const Json& j) {
  BundleInstance b;
  b.base = instance_from_json(j);
  const auto rows = detail::field<std::vector<std::vector<int>>>(j, "incidence");
  b.L = rows.size();
  for (std::size_t l = 0; l < b.L; ++l) {
    if (rows[l].size() != b.base.m) throw DataError("incidence row " + std::to_string(l) + " must have m entries");
    for (int v : rows[l]) {
      if (v != 0 && v != 1) throw DataError("incidence entries must be 0 or 1");
      b.incidence.push_back(static_cast<std::uint8_t>(v));
    }
  }
  b.resource_capacities = detail::field<std::vector<double>>(j, "resource_capacities");
  const auto rep = validate(b);
  if (!rep.ok()) throw DataError(rep.summary());
  return b;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Writes to a sibling temporary file, then renames over `path`.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
  }
}

inline Json primal_to_json(const PrimalState& primal) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < primal.n(); ++i) {
    const auto& r = primal.row(i);
    Json sales = Json::array();
    for (const auto& s : r.sales) sales.push_back(Json::array({s.product, s.quantity}));
    rows.push_back(Json{{"y0", r.y0}, {"sales", std::move(sales)}});
  }
  return rows;
}

inline PrimalState primal_from_json(const Json& j, const Instance& inst) {
  if (!j.is_array() || j.size() != inst.n) throw DataError("primal must hold one row per customer");
  PrimalState s = PrimalState::no_purchase(inst);
  try {
    for (std::size_t i = 0; i < inst.n; ++i) {
      RowAllocation row;
      row.y0 = j[i].at("y0").get<double>();
      for (const auto& e : j[i].at("sales")) {
        const auto p = e.at(0).get<std::int64_t>();
        if (p < 0 || static_cast<std::size_t>(p) >= inst.m) throw DataError("primal row " + std::to_string(i) + " has an out-of-range product");
        row.sales.push_back({static_cast<std::uint32_t>(p), e.at(1).get<double>()});
      }
      s.set_row(i, std::move(row));
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("primal: ") + e.what());
  }
  s.rebuild_caches(inst.prices);
  return s;
}

inline Json to_json(const SolveReport& report, bool with_primal = true) {
  Json j{{"objective", report.objective},
         {"eta", report.duals.eta},
         {"iterations", report.iterations},
         {"overload_ratio", report.overload_ratio},
         {"stagnated", report.stagnated},
         {"mu", report.mu},
         {"resource_usage", report.resource_usage}};
  if (with_primal) j["primal"] = primal_to_json(report.primal);
  return j;
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string trajectory_csv(const std::vector<TrajectoryPoint>& points) {
  std::ostringstream os;
  os << "iter,objective,dual_norm,dist_sq\n";
  for (const auto& p : points) {
    os << p.iter << ',' << format_number(p.objective) << ',' << format_number(p.dual_norm) << ',';
    if (p.dist_sq) os << format_number(*p.dist_sq);
    os << '\n';
  }
  return os.str();
}

inline std::string policy_jsonl(const AssortmentPolicy& policy) {
  std::string out;
  for (const auto& cp : policy.customers) {
    Json alphas = Json::array();
    for (const auto& a : cp.support) alphas.push_back(Json{{"len", a.length}, {"p", a.probability}});
    out += Json{{"i", cp.customer}, {"order", cp.order}, {"alphas", std::move(alphas)}}.dump();
    out += '\n';
  }
  return out;
}

// Rows for one run of one policy.
inline std::string sim_trace_csv_rows(const SimTrace& trace, std::size_t run) {
  std::ostringstream os;
  double cum = 0.0;
  for (std::size_t t = 0; t < trace.batches.size(); ++t) {
    const auto& b = trace.batches[t];
    cum += b.revenue;
    os << run << ',' << t << ',' << format_number(b.revenue) << ',' << format_number(cum) << ','
       << format_number(b.qty_sold()) << ',' << format_number(b.inventory_total()) << ','
       << format_number(batch_mean_dual(b)) << '\n';
  }
  return os.str();
}

inline constexpr const char* kSimTraceHeader = "run,batch,revenue,cum_revenue,qty_sold,inventory_remaining_total,mean_dual\n";

inline std::string sales_histogram_csv(const std::vector<SimTrace>& traces) {
  std::ostringstream os;
  os << "run,product,price,sold\n";
  for (std::size_t r = 0; r < traces.size(); ++r) {
    const auto& tr = traces[r];
    for (std::size_t j = 0; j < tr.sales_histogram.size(); ++j) {
      os << r << ',' << j << ',' << format_number(tr.prices[j]) << ',' << format_number(tr.sales_histogram[j]) << '\n';
    }
  }
  return os.str();
}

inline Json to_json(const SampleSummary& s) {
  return Json{{"count", s.count}, {"mean", s.mean}, {"stddev", s.stddev}, {"ci95_low", s.mean - s.ci95},
              {"ci95_high", s.mean + s.ci95}};
}

}  // namespace spfom
