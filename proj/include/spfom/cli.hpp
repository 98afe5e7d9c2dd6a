#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spfom/bundle.hpp"
#include "spfom/inner.hpp"
#include "spfom/instance.hpp"
#include "spfom/json_io.hpp"
#include "spfom/recovery.hpp"
#include "spfom/reference.hpp"
#include "spfom/rng.hpp"
#include "spfom/sim.hpp"
#include "spfom/solver.hpp"

namespace spfom::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// Default worker count when --k is not given.
inline constexpr const char* kThreadsEnv = "SPFOM_THREADS";

namespace detail {

struct SolverFlags {
  double tau = 0.1;
  std::string mu = "0.5";
  std::size_t batch = 10;
  std::optional<std::size_t> workers;
  double golden_tol = 1e-3;
  std::optional<std::size_t> window;
  double stagnation_tol = 1e-9;
  std::size_t max_iters = 1'000'000;
  std::uint64_t seed = 0;
  bool plain = false;
};

inline void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--tau", f.tau, "dual step size")->capture_default_str();
  cmd->add_option("--mu", f.mu, "penalty weight, or 'auto'")->capture_default_str();
  cmd->add_option("--B", f.batch, "customers per worker per iteration")->capture_default_str();
  cmd->add_option("--k", f.workers, std::string("worker threads (default $") + kThreadsEnv + " or 1)");
  cmd->add_option("--golden-tol", f.golden_tol, "golden-section tolerance")->capture_default_str();
  cmd->add_option("--window", f.window, "stagnation window (default max(100, n/100))");
  cmd->add_option("--stagnation-tol", f.stagnation_tol, "relative objective change counted as flat")
      ->capture_default_str();
  cmd->add_option("--max-iters", f.max_iters, "iteration cap")->capture_default_str();
  cmd->add_option("--seed", f.seed, "root seed")->capture_default_str();
  cmd->add_flag("--unpenalized", f.plain, "plain projected dual step (no penalty)");
}

inline std::size_t default_workers() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw UsageError(std::string(kThreadsEnv) + " must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  return 1;
}

inline std::optional<double> parse_mu(const std::string& s) {
  if (s == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("--mu expects a number or 'auto', got '" + s + "'");
  }
}

inline SolverParams to_params(const SolverFlags& f) {
  SolverParams p;
  p.tau = f.tau;
  p.mu = parse_mu(f.mu);
  p.penalized = !f.plain;
  p.batch_size = f.batch;
  p.workers = f.workers ? *f.workers : default_workers();
  p.golden_tol = f.golden_tol;
  p.stagnation_window = f.window;
  p.stagnation_rel_tol = f.stagnation_tol;
  p.max_iters = f.max_iters;
  p.seed = f.seed;
  return p;
}

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_file_atomic(path, content);
  }
}

inline void print_report_summary(const SolveReport& r, std::ostream& out) {
  out << "objective=" << format_number(r.objective) << " iterations=" << r.iterations
      << " overload_ratio=" << format_number(r.overload_ratio) << " stagnated=" << (r.stagnated ? 1 : 0)
      << " mu=" << format_number(r.mu) << '\n';
}

inline SolveReport solve_with(const Instance& inst, SolverParams params) {
  return params.workers > 1 ? spfom_solve_parallel(inst, params) : spfom_solve(inst, params);
}

inline BundleInstance random_bundle(const Instance& base, std::size_t L, std::uint64_t seed, Range capacity) {
  BundleInstance b;
  b.base = base;
  b.L = L;
  b.incidence.assign(L * base.m, 0);
  Rng rng(seed, Stream::kInstance, 1);
  for (auto& v : b.incidence) v = rng.uniform() < 0.5 ? 1 : 0;
  for (std::size_t j = 0; j < base.m; ++j) {
    bool any = false;
    for (std::size_t l = 0; l < L; ++l) any = any || b.incidence[l * base.m + j];
    if (!any) b.incidence[rng.below(L) * base.m + j] = 1;
  }
  b.resource_capacities.resize(L);
  for (auto& c : b.resource_capacities) c = rng.uniform(capacity.lo, capacity.hi);
  return b;
}

inline WeightMatrix to_sparse(const WeightMatrix& w) {
  std::vector<std::vector<WeightMatrix::Entry>> rows(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    w.for_each_nonzero(i, [&](std::size_t j, double v) { rows[i].push_back({static_cast<std::uint32_t>(j), v}); });
  }
  return WeightMatrix::sparse(w.rows(), w.cols(), rows);
}

struct Verification {
  double sblp_optimum = 0.0;
  double spfom_objective = 0.0;
  double sblp_gap = 0.0;
  std::optional<double> cblp_gap;
  std::size_t inner_checks = 0;
  std::size_t inner_mismatches = 0;
  double recovery_residual = 0.0;
};

// Oracle cross-checks: SPFOM vs simplex, choice-based vs sales-based LP,
// greedy inner solver vs simplex on every customer, recovery of the simplex
// optimum.
inline Verification verify_instance(const Instance& inst, const SolverParams& params) {
  if (inst.has_shadow()) throw UsageError("verify supports MNL instances only");
  if (inst.n > 1000 || inst.m > 10) throw UsageError("verify needs n <= 1000 and m <= 10");
  Verification v;
  const auto opt = reference::simplex_solve_sblp(inst);
  v.sblp_optimum = opt.objective;
  const auto report = solve_with(inst, params);
  v.spfom_objective = report.objective;
  v.sblp_gap = (opt.objective - report.objective) / std::max(1.0, std::abs(opt.objective));
  if (inst.m <= 4 && inst.n <= 50) {
    const auto cblp = reference::cblp_enumerate_solve(inst);
    v.cblp_gap = std::abs(cblp.objective - opt.objective) / std::max(1.0, std::abs(opt.objective));
  }
  Rng rng(params.seed, Stream::kInstance, 2);
  std::vector<DualPrices> duals{opt.duals, DualPrices{std::vector<double>(inst.m, 0.0)}};
  DualPrices random_duals;
  for (std::size_t j = 0; j < inst.m; ++j) random_duals.eta.push_back(rng.uniform(0.0, inst.prices[j] * 1.5));
  duals.push_back(random_duals);
  for (std::size_t i = 0; i < inst.n; ++i) {
    const double lo = feasible_nopurchase_bound(inst, i);
    const double lambda = inst.lambdas[i];
    for (const auto& d : duals) {
      for (double y0 : {lo, 0.5 * (lo + lambda), lambda}) {
        const auto fast = fast_inner(inst, i, y0, d);
        const auto slow = reference::inner_bruteforce(inst, i, y0, d);
        ++v.inner_checks;
        if (std::abs(fast.value - slow.value) > 1e-9) ++v.inner_mismatches;
      }
    }
  }
  const auto primal = PrimalState::from_dense(inst, opt.y);
  v.recovery_residual = policy_consistency_residual(inst, recover_policy(inst, primal), primal);
  return v;
}

inline int map_error(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  return kExitData;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sales-based assortment LPs solved by a stochastic primal-dual first-order method", "spfom"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "synthesize a random instance as JSON");
  std::size_t gen_n = 100, gen_m = 10, gen_periods = 0, gen_resources = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  GenerationConfig gen_cfg;
  double w0_lo = -1.0, w0_hi = -1.0;
  bool gen_sparse = false;
  gen->add_option("--n", gen_n, "customers")->capture_default_str();
  gen->add_option("--m", gen_m, "products")->capture_default_str();
  gen->add_option("--seed", gen_seed, "root seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output path ('-' for standard output)")->required();
  gen->add_option("--cap-lo", gen_cfg.capacity.lo, "capacity lower bound")->capture_default_str();
  gen->add_option("--cap-hi", gen_cfg.capacity.hi, "capacity upper bound")->capture_default_str();
  gen->add_option("--price-lo", gen_cfg.price.lo, "price lower bound")->capture_default_str();
  gen->add_option("--price-hi", gen_cfg.price.hi, "price upper bound")->capture_default_str();
  gen->add_option("--weight-lo", gen_cfg.weight.lo, "weight lower bound")->capture_default_str();
  gen->add_option("--weight-hi", gen_cfg.weight.hi, "weight upper bound")->capture_default_str();
  gen->add_option("--w0-lo", w0_lo, "no-purchase weight lower bound (default: weight range)");
  gen->add_option("--w0-hi", w0_hi, "no-purchase weight upper bound (default: weight range)");
  gen->add_option("--lambda", gen_cfg.lambda, "arrival rate of every customer")->capture_default_str();
  gen->add_flag("--sparse", gen_sparse, "store weight rows in sparse form");
  auto* periods_opt = gen->add_option("--periods", gen_periods, "emit a multi-period instance with this many periods");
  gen->add_option("--resources", gen_resources, "emit a bundle instance with this many resources")
      ->excludes(periods_opt);

  // solve
  auto* solve = app.add_subcommand("solve", "run SPFOM on an instance file");
  std::string solve_in, solve_out, solve_traj, solve_ref;
  detail::SolverFlags solve_flags;
  bool solve_no_primal = false;
  solve->add_option("instance", solve_in, "instance JSON")->required();
  detail::add_solver_flags(solve, solve_flags);
  solve->add_option("--out", solve_out, "report JSON path (default: standard output)");
  solve->add_option("--trajectory", solve_traj, "trajectory CSV path");
  solve->add_option("--reference", solve_ref, "report JSON whose primal is the distance reference");
  solve->add_flag("--no-primal", solve_no_primal, "omit per-customer rows from the report");

  // recover
  auto* rec = app.add_subcommand("recover", "turn a sales solution into a nested-assortment policy");
  std::string rec_inst, rec_report, rec_out;
  rec->add_option("instance", rec_inst, "instance JSON")->required();
  rec->add_option("report", rec_report, "report JSON with a primal section")->required();
  rec->add_option("--out", rec_out, "policy JSON-lines path (default: standard output)");

  // verify
  auto* ver = app.add_subcommand("verify", "cross-check solvers against exact oracles on a small instance");
  std::string ver_in;
  detail::SolverFlags ver_flags;
  ver->add_option("instance", ver_in, "instance JSON")->required();
  detail::add_solver_flags(ver, ver_flags);

  // simulate
  auto* sim = app.add_subcommand("simulate", "multi-period GO vs MSD bid-price simulation");
  SimConfig sim_cfg = market_config();
  std::string sim_dir = ".";
  std::string horizon = "batch";
  double sim_w0_hi = sim_cfg.no_purchase_weight->hi;
  sim->add_option("--runs", sim_cfg.runs, "replications")->capture_default_str();
  sim->add_option("--batches", sim_cfg.batches, "batches per run")->capture_default_str();
  sim->add_option("--customers", sim_cfg.customers_per_batch, "customers per batch")->capture_default_str();
  sim->add_option("--products", sim_cfg.products, "products")->capture_default_str();
  sim->add_option("--segments", sim_cfg.segments, "MSD segments")->capture_default_str();
  sim->add_option("--rec-limit", sim_cfg.rec_limit, "products shown per customer")->capture_default_str();
  sim->add_option("--seed", sim_cfg.seed, "root seed")->capture_default_str();
  sim->add_option("--w0-hi", sim_w0_hi, "no-purchase weights are U(0, w0-hi)")->capture_default_str();
  sim->add_option("--horizon", horizon, "planning capacities: batch, prorated or stacked")
      ->check(CLI::IsMember({"batch", "prorated", "stacked"}))
      ->capture_default_str();
  sim->add_option("--out-dir", sim_dir, "directory for trace, histogram and summary files")->capture_default_str();

  // bundle-solve
  auto* bun = app.add_subcommand("bundle-solve", "run SPFOM on a bundle instance file");
  std::string bun_in, bun_out;
  detail::SolverFlags bun_flags;
  std::optional<double> bun_r_tilde;
  bun->add_option("instance", bun_in, "bundle instance JSON")->required();
  detail::add_solver_flags(bun, bun_flags);
  bun->add_option("--r-tilde", bun_r_tilde, "bound on sum_j of bundle margins used by --mu auto");
  bun->add_option("--out", bun_out, "report JSON path (default: standard output)");

  std::vector<std::string> args;
  for (int a = argc - 1; a > 0; --a) args.emplace_back(argv[a]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nrun with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*gen) {
      if (w0_lo >= 0.0 || w0_hi >= 0.0) {
        gen_cfg.no_purchase_weight = Range{w0_lo >= 0.0 ? w0_lo : gen_cfg.weight.lo,
                                           w0_hi >= 0.0 ? w0_hi : gen_cfg.weight.hi};
      }
      auto make = [&](std::uint64_t seed) {
        auto inst = generate_uniform(gen_n, gen_m, seed, gen_cfg);
        if (gen_sparse) inst.weights = detail::to_sparse(inst.weights);
        return inst;
      };
      Json doc;
      if (gen_periods > 0) {
        MultiPeriodInstance mp;
        for (std::size_t t = 0; t < gen_periods; ++t) {
          auto p = make(derive_seed(gen_seed, Stream::kInstance, t));
          if (t > 0) {
            p.prices = mp.periods.front().prices;
            p.capacities = mp.periods.front().capacities;
          }
          mp.periods.push_back(std::move(p));
        }
        mp.initial_capacities = mp.periods.front().capacities;
        doc = to_json(mp);
      } else if (gen_resources > 0) {
        doc = to_json(detail::random_bundle(make(gen_seed), gen_resources, gen_seed, gen_cfg.capacity));
      } else {
        doc = to_json(make(gen_seed));
      }
      detail::emit(gen_out, doc.dump() + "\n", out);
      if (gen_out != "-") out << "wrote " << gen_out << '\n';
      return kExitOk;
    }

    if (*solve) {
      const auto inst = instance_from_json(read_json_file(solve_in));
      auto params = detail::to_params(solve_flags);
      std::optional<PrimalState> reference;
      if (!solve_ref.empty()) {
        const auto ref = read_json_file(solve_ref);
        if (!ref.contains("primal")) throw DataError(solve_ref + " has no primal section");
        reference = primal_from_json(ref["primal"], inst);
        params.distance_reference = &*reference;
      }
      params.record_trajectory = !solve_traj.empty();
      const auto report = detail::solve_with(inst, params);
      if (!solve_traj.empty()) write_file_atomic(solve_traj, trajectory_csv(report.trajectory));
      const std::string doc = to_json(report, !solve_no_primal).dump() + "\n";
      if (solve_out.empty()) {
        out << doc;
      } else {
        write_file_atomic(solve_out, doc);
        detail::print_report_summary(report, out);
      }
      return kExitOk;
    }

    if (*rec) {
      const auto inst = instance_from_json(read_json_file(rec_inst));
      const auto report = read_json_file(rec_report);
      if (!report.contains("primal")) throw DataError(rec_report + " has no primal section");
      const auto primal = primal_from_json(report["primal"], inst);
      const auto policy = recover_policy(inst, primal);
      detail::emit(rec_out, policy_jsonl(policy), out);
      if (!rec_out.empty() && rec_out != "-") {
        out << "customers=" << policy.customers.size()
            << " consistency_residual=" << format_number(policy_consistency_residual(inst, policy, primal)) << '\n';
      }
      return kExitOk;
    }

    if (*ver) {
      const auto inst = instance_from_json(read_json_file(ver_in));
      const auto v = detail::verify_instance(inst, detail::to_params(ver_flags));
      out << "sblp_optimum=" << format_number(v.sblp_optimum) << '\n';
      out << "spfom_objective=" << format_number(v.spfom_objective) << '\n';
      out << "sblp_gap=" << format_number(v.sblp_gap) << '\n';
      if (v.cblp_gap) {
        out << "cblp_gap=" << format_number(*v.cblp_gap) << '\n';
      } else {
        out << "cblp_gap=skipped (needs m <= 4 and n <= 50)\n";
      }
      out << "inner_checks=" << v.inner_checks << '\n';
      out << "inner_mismatches=" << v.inner_mismatches << '\n';
      out << "recovery_residual=" << format_number(v.recovery_residual) << '\n';
      return kExitOk;
    }

    if (*sim) {
      sim_cfg.no_purchase_weight = Range{0.0, sim_w0_hi};
      sim_cfg.horizon = horizon == "batch"      ? PlanningHorizon::kBatch
                        : horizon == "prorated" ? PlanningHorizon::kProrated
                                                : PlanningHorizon::kStacked;
      validate_config(sim_cfg);
      std::filesystem::create_directories(sim_dir);
      std::vector<SimTrace> go, msd;
      std::string go_csv = kSimTraceHeader, msd_csv = kSimTraceHeader;
      std::vector<double> rev_go, rev_msd, h_go, h_msd, oc_go, oc_msd;
      std::size_t crossings = 0;
      for (std::size_t r = 0; r < sim_cfg.runs; ++r) {
        const auto mp = generate_market(sim_cfg, r);
        go.push_back(run_go_policy(mp, sim_cfg, r));
        msd.push_back(run_msd_policy(mp, sim_cfg, r));
        go_csv += sim_trace_csv_rows(go.back(), r);
        msd_csv += sim_trace_csv_rows(msd.back(), r);
        rev_go.push_back(go.back().cumulative_revenue);
        rev_msd.push_back(msd.back().cumulative_revenue);
        h_go.push_back(sales_entropy(go.back()).value);
        h_msd.push_back(sales_entropy(msd.back()).value);
        oc_go.push_back(mean_opportunity_cost(go.back()).value);
        oc_msd.push_back(mean_opportunity_cost(msd.back()).value);
        if (first_inventory_crossing(go.back(), msd.back())) ++crossings;
        out << "run " << r << ": go_revenue=" << format_number(rev_go.back())
            << " msd_revenue=" << format_number(rev_msd.back()) << '\n';
      }
      const auto dir = std::filesystem::path(sim_dir);
      write_file_atomic((dir / "go_trace.csv").string(), go_csv);
      write_file_atomic((dir / "msd_trace.csv").string(), msd_csv);
      write_file_atomic((dir / "go_histogram.csv").string(), sales_histogram_csv(go));
      write_file_atomic((dir / "msd_histogram.csv").string(), sales_histogram_csv(msd));
      Json summary{{"runs", sim_cfg.runs},
                   {"go", {{"cumulative_revenue", to_json(summarize(rev_go))},
                           {"sales_entropy_bits", to_json(summarize(h_go))},
                           {"mean_opportunity_cost", to_json(summarize(oc_go))}}},
                   {"msd", {{"cumulative_revenue", to_json(summarize(rev_msd))},
                            {"sales_entropy_bits", to_json(summarize(h_msd))},
                            {"mean_opportunity_cost", to_json(summarize(oc_msd))}}},
                   {"runs_with_msd_inventory_below_go", crossings}};
      if (sim_cfg.runs >= 2) {
        const auto t = paired_greater(rev_go, rev_msd);
        summary["revenue_paired_t"] = Json{{"t", t.t}, {"critical", t.critical}, {"go_greater", t.reject}};
      }
      write_file_atomic((dir / "summary.json").string(), summary.dump(2) + "\n");
      out << "go_mean_revenue=" << format_number(summarize(rev_go).mean)
          << " msd_mean_revenue=" << format_number(summarize(rev_msd).mean) << '\n';
      return kExitOk;
    }

    if (*bun) {
      const auto binst = bundle_from_json(read_json_file(bun_in));
      auto params = detail::to_params(bun_flags);
      if (!params.mu) {
        double r_tilde = 0.0;
        if (bun_r_tilde) {
          r_tilde = *bun_r_tilde;
        } else {
          for (double r : binst.base.prices) r_tilde += std::max(0.0, r);
        }
        params.mu = std::min(bundle_mu_bound(binst, r_tilde), 1.0 / params.tau);
      }
      const auto report = spfom_solve_bundle(binst, params);
      const std::string doc = to_json(report, true).dump() + "\n";
      if (bun_out.empty()) {
        out << doc;
      } else {
        write_file_atomic(bun_out, doc);
        detail::print_report_summary(report, out);
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    return detail::map_error(e, err);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace spfom::cli
