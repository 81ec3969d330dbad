// Experiment grid runner: for every (n, lambda, repeat) a synthetic market is
// generated from a seed derived from the base seed, every configured method
// builds its policy on it, and each policy is evaluated by Monte-Carlo
// simulation under the true examination function.  Output is a long-form CSV
// with one row per (method, n, lambda, repeat) plus one aggregate row per
// (method, n, lambda) carrying means and the standard error across repeats.
//
// Seed derivation (hash chain from the base seed, see rng.hpp):
//   market seed  = derive_seed(base, {1, n, bits(lambda), repeat})
//   eval seed    = derive_seed(base, {2, n, bits(lambda), repeat, method_idx})
// so any single cell can be reproduced in isolation.

#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "matchmarket/core.hpp"
#include "matchmarket/datagen.hpp"
#include "matchmarket/examination.hpp"
#include "matchmarket/parallel.hpp"
#include "matchmarket/policies.hpp"
#include "matchmarket/rng.hpp"
#include "matchmarket/simulator.hpp"
#include "matchmarket/sw.hpp"
#include "matchmarket/tu.hpp"

namespace matchmarket {

struct MethodSpec {
  std::string name;               // naive | reciprocal | tu | sw
  double beta = 1.0;              // tu only
  std::string assumed_v = "inv";  // sw only: the objective's examination

  void validate() const {
    if (name == "naive" || name == "reciprocal") return;
    if (name == "tu") {
      if (!(beta > 0)) throw std::invalid_argument("method tu: beta must be > 0");
      return;
    }
    if (name == "sw") {
      Examination<double>::from_name(assumed_v);  // throws on unknown names
      return;
    }
    throw std::invalid_argument("unknown method \"" + name + "\"");
  }
};

struct ExperimentSpec {
  std::vector<Index> ns;
  std::vector<double> lambdas;
  std::string true_v = "inv";
  std::vector<MethodSpec> methods;
  std::int64_t repeats = 10;
  std::int64_t sims_per_eval = 10000;
  std::uint64_t seed = 1;
  double memory_budget_mb = 1024;
  // With timing off the wall_ms column is written as 0 and the CSV is
  // byte-identical across runs; with it on, wall_ms is the only column that
  // can differ between two runs of the same spec.
  bool record_timing = true;

  void validate() const {
    if (ns.empty()) throw std::invalid_argument("experiment: ns must be non-empty");
    for (Index n : ns)
      if (n < 1) throw std::invalid_argument("experiment: every n must be >= 1");
    if (lambdas.empty())
      throw std::invalid_argument("experiment: lambdas must be non-empty");
    for (double l : lambdas)
      if (!(l >= 0) || !(l <= 1))
        throw std::invalid_argument("experiment: lambda must lie in [0, 1]");
    if (methods.empty())
      throw std::invalid_argument("experiment: methods must be non-empty");
    for (const MethodSpec& m : methods) m.validate();
    if (repeats < 1) throw std::invalid_argument("experiment: repeats must be >= 1");
    if (sims_per_eval < 1)
      throw std::invalid_argument("experiment: sims_per_eval must be >= 1");
    if (!(memory_budget_mb > 0))
      throw std::invalid_argument("experiment: memory_budget_mb must be > 0");
    Examination<double>::from_name(true_v);
  }
};

struct ExperimentRow {
  std::string method;
  Index n = 0;
  double lambda = 0;
  std::string beta;       // formatted for tu rows, empty otherwise
  std::string assumed_v;  // set for sw rows, empty otherwise
  std::string true_v;
  std::string repeat_label;  // "0", "1", ... or "agg"
  std::uint64_t seed = 0;    // market seed; base seed on aggregate rows
  bool has_metrics = false;
  double sw_mean = 0;
  double sw_stderr = 0;
  double gini_candidates = 0;
  double gini_employers = 0;
  double iterations = -1;  // negative = blank column
  std::string converged;   // true | false | infeasible | error
  std::int64_t wall_ms = 0;
};

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// Peak working set of the Frank-Wolfe method: three policy-sized arrays
// (iterate/result mixture, its permutation decomposition, and evaluation
// scratch), each |C| x |J| x |J| doubles.
inline double sw_memory_bytes(Index num_candidates, Index num_jobs) {
  return 3.0 * static_cast<double>(num_candidates) *
         static_cast<double>(num_jobs) * static_cast<double>(num_jobs) * 8.0;
}

}  // namespace detail

inline std::string experiment_csv_header() {
  return "method,n,lambda,beta,assumed_v,true_v,repeat,seed,sw_mean,sw_stderr,"
         "gini_candidates,gini_employers,iterations,converged,wall_ms";
}

inline std::string experiment_csv_row(const ExperimentRow& row) {
  std::string out;
  out += row.method;
  out += ',';
  out += std::to_string(row.n);
  out += ',';
  out += detail::format_double(row.lambda);
  out += ',';
  out += row.beta;
  out += ',';
  out += row.assumed_v;
  out += ',';
  out += row.true_v;
  out += ',';
  out += row.repeat_label;
  out += ',';
  out += std::to_string(row.seed);
  out += ',';
  if (row.has_metrics) {
    out += detail::format_double(row.sw_mean);
    out += ',';
    out += detail::format_double(row.sw_stderr);
    out += ',';
    out += detail::format_double(row.gini_candidates);
    out += ',';
    out += detail::format_double(row.gini_employers);
  } else {
    out += ",,,";
  }
  out += ',';
  if (row.iterations >= 0) out += detail::format_double(row.iterations);
  out += ',';
  out += row.converged;
  out += ',';
  out += std::to_string(row.wall_ms);
  return out;
}

inline std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = experiment_csv_header();
  out += '\n';
  for (const ExperimentRow& row : rows) {
    out += experiment_csv_row(row);
    out += '\n';
  }
  return out;
}

namespace detail {

struct MethodOutcome {
  bool has_metrics = false;
  double sw_mean = 0, sw_stderr = 0, gini_candidates = 0, gini_employers = 0;
  double iterations = -1;
  std::string converged;
  std::int64_t wall_ms = 0;
};

template <typename Clock = std::chrono::steady_clock>
MethodOutcome evaluate_method(const MethodSpec& method,
                              const PreferenceMatrices<double>& prefs,
                              const Examination<double>& true_exam,
                              std::int64_t sims, std::uint64_t eval_seed,
                              double memory_budget_mb, bool record_timing) {
  MethodOutcome out;
  const auto start = Clock::now();
  try {
    if (method.name == "sw" &&
        sw_memory_bytes(prefs.num_candidates(), prefs.num_jobs()) >
            memory_budget_mb * 1048576.0) {
      out.converged = "infeasible";
      return out;
    }
    SimulationSummary<double> summary;
    if (method.name == "naive" || method.name == "reciprocal") {
      const DeterministicPolicy policy = method.name == "naive"
                                             ? naive_policy(prefs)
                                             : reciprocal_policy(prefs);
      summary = simulate_policy(policy, prefs, true_exam, sims, eval_seed, 1);
      out.converged = "true";
    } else if (method.name == "tu") {
      TUConfig<double> config;
      config.beta = method.beta;
      const EquilibriumMatching<double> eq = solve_ipfp(prefs, config);
      // Evaluate the final iterate even when not converged; the converged
      // column records the flag.
      const DeterministicPolicy policy = tu_policy(eq, /*force=*/true);
      summary = simulate_policy(policy, prefs, true_exam, sims, eval_seed, 1);
      out.iterations = static_cast<double>(eq.iterations);
      out.converged = eq.converged ? "true" : "false";
    } else {  // sw
      SWConfig<double> config;
      config.examination = Examination<double>::from_name(method.assumed_v);
      const SWSolution<double> solution = solve_sw_full(prefs, config);
      summary = simulate_policy(solution.decompositions, prefs, true_exam,
                                sims, eval_seed, 1);
      out.iterations = static_cast<double>(config.timesteps);
      out.converged = "true";
    }
    out.sw_mean = summary.estimate.mean;
    out.sw_stderr = summary.estimate.standard_error;
    out.gini_candidates = gini(summary.candidate_match_means);
    out.gini_employers = gini(summary.employer_match_means);
    out.has_metrics = true;
  } catch (const std::exception& e) {
    out.converged = "error";
    out.has_metrics = false;
    std::cerr << "experiment: " << method.name << " failed: " << e.what()
              << "\n";
  }
  if (record_timing)
    out.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      Clock::now() - start)
                      .count();
  return out;
}

}  // namespace detail

// Runs the grid.  Cells (one market each) are distributed over `threads`
// workers; all results are deterministic for a fixed ExperimentSpec because
// every cell derives its own seeds.  Rows come out grouped by (n, lambda, method):
// repeats in order, then the aggregate row.
inline std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec,
                                                 int threads = 0) {
  spec.validate();
  const Examination<double> true_exam =
      Examination<double>::from_name(spec.true_v);

  struct Cell {
    Index n;
    double lambda;
    std::int64_t repeat;
    std::uint64_t market_seed;
  };
  std::vector<Cell> cells;
  for (Index n : spec.ns)
    for (double lambda : spec.lambdas)
      for (std::int64_t r = 0; r < spec.repeats; ++r)
        cells.push_back(
            {n, lambda, r,
             derive_seed(spec.seed, {1, static_cast<std::uint64_t>(n),
                                     double_key(lambda),
                                     static_cast<std::uint64_t>(r)})});

  // outcome[cell][method]
  std::vector<std::vector<detail::MethodOutcome>> outcomes(
      cells.size(), std::vector<detail::MethodOutcome>(spec.methods.size()));

  parallel_queue(static_cast<std::int64_t>(cells.size()), threads,
                 [&](std::int64_t cell_idx) {
    const Cell& cell = cells[static_cast<std::size_t>(cell_idx)];
    SyntheticConfig config;
    config.n = cell.n;
    config.lambda = cell.lambda;
    config.seed = cell.market_seed;
    const PreferenceMatrices<double> prefs = generate_market(config);
    for (std::size_t m = 0; m < spec.methods.size(); ++m) {
      const std::uint64_t eval_seed = derive_seed(
          spec.seed, {2, static_cast<std::uint64_t>(cell.n),
                      double_key(cell.lambda),
                      static_cast<std::uint64_t>(cell.repeat),
                      static_cast<std::uint64_t>(m)});
      outcomes[static_cast<std::size_t>(cell_idx)][m] = detail::evaluate_method(
          spec.methods[m], prefs, true_exam, spec.sims_per_eval, eval_seed,
          spec.memory_budget_mb, spec.record_timing);
    }
  });

  // Assemble rows: per (n, lambda, method) the repeat rows then "agg".
  std::vector<ExperimentRow> rows;
  const std::size_t lambda_count = spec.lambdas.size();
  for (std::size_t ni = 0; ni < spec.ns.size(); ++ni) {
    for (std::size_t li = 0; li < lambda_count; ++li) {
      for (std::size_t m = 0; m < spec.methods.size(); ++m) {
        const MethodSpec& method = spec.methods[m];
        ExperimentRow base;
        base.method = method.name;
        base.n = spec.ns[ni];
        base.lambda = spec.lambdas[li];
        if (method.name == "tu") base.beta = detail::format_double(method.beta);
        if (method.name == "sw") base.assumed_v = method.assumed_v;
        base.true_v = spec.true_v;

        std::vector<double> means, gini_c, gini_e, iters, walls;
        std::string agg_converged = "true";
        std::int64_t ok_count = 0;
        bool any_infeasible = false, any_error = false;
        for (std::int64_t r = 0; r < spec.repeats; ++r) {
          const std::size_t cell_idx =
              (ni * lambda_count + li) * static_cast<std::size_t>(spec.repeats) +
              static_cast<std::size_t>(r);
          const Cell& cell = cells[cell_idx];
          const detail::MethodOutcome& out = outcomes[cell_idx][m];
          ExperimentRow row = base;
          row.repeat_label = std::to_string(r);
          row.seed = cell.market_seed;
          row.has_metrics = out.has_metrics;
          row.sw_mean = out.sw_mean;
          row.sw_stderr = out.sw_stderr;
          row.gini_candidates = out.gini_candidates;
          row.gini_employers = out.gini_employers;
          row.iterations = out.iterations;
          row.converged = out.converged;
          row.wall_ms = out.wall_ms;
          rows.push_back(row);
          if (out.has_metrics) {
            ++ok_count;
            means.push_back(out.sw_mean);
            gini_c.push_back(out.gini_candidates);
            gini_e.push_back(out.gini_employers);
            if (out.iterations >= 0) iters.push_back(out.iterations);
            walls.push_back(static_cast<double>(out.wall_ms));
            if (out.converged == "false") agg_converged = "false";
          } else if (out.converged == "infeasible") {
            any_infeasible = true;
          } else {
            any_error = true;
          }
        }
        ExperimentRow agg = base;
        agg.repeat_label = "agg";
        agg.seed = spec.seed;
        if (ok_count > 0) {
          auto mean_of = [](const std::vector<double>& v) {
            double s = 0;
            for (double x : v) s += x;
            return s / static_cast<double>(v.size());
          };
          agg.has_metrics = true;
          agg.sw_mean = mean_of(means);
          double ss = 0;
          for (double x : means) ss += (x - agg.sw_mean) * (x - agg.sw_mean);
          // across-repeat standard error of the mean
          agg.sw_stderr =
              ok_count > 1 ? std::sqrt(ss / static_cast<double>(ok_count - 1) /
                                       static_cast<double>(ok_count))
                           : 0.0;
          agg.gini_candidates = mean_of(gini_c);
          agg.gini_employers = mean_of(gini_e);
          agg.iterations = iters.empty() ? -1 : mean_of(iters);
          agg.converged = agg_converged;
          agg.wall_ms = static_cast<std::int64_t>(std::llround(mean_of(walls)));
        } else {
          agg.has_metrics = false;
          agg.converged = any_error ? "error"
                                    : (any_infeasible ? "infeasible" : "error");
          agg.wall_ms = 0;
        }
        rows.push_back(agg);
      }
    }
  }
  return rows;
}

// JSON config: {"ns": [..], "lambdas": [..], "true_v": "inv",
//   "methods": [{"name": "naive"}, {"name": "tu", "beta": 1.0},
//               {"name": "sw", "assumed_v": "inv"}],
//   "repeats": 10, "sims_per_eval": 10000, "seed": 1,
//   "memory_budget_mb": 1024, "record_timing": true}
inline ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
  ExperimentSpec spec;
  for (const auto& x : j.at("ns")) spec.ns.push_back(x.get<Index>());
  for (const auto& x : j.at("lambdas")) spec.lambdas.push_back(x.get<double>());
  if (j.contains("true_v")) spec.true_v = j.at("true_v").get<std::string>();
  for (const auto& m : j.at("methods")) {
    MethodSpec method;
    method.name = m.at("name").get<std::string>();
    if (m.contains("beta")) method.beta = m.at("beta").get<double>();
    if (m.contains("assumed_v"))
      method.assumed_v = m.at("assumed_v").get<std::string>();
    spec.methods.push_back(std::move(method));
  }
  if (j.contains("repeats")) spec.repeats = j.at("repeats").get<std::int64_t>();
  if (j.contains("sims_per_eval"))
    spec.sims_per_eval = j.at("sims_per_eval").get<std::int64_t>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("memory_budget_mb"))
    spec.memory_budget_mb = j.at("memory_budget_mb").get<double>();
  if (j.contains("record_timing"))
    spec.record_timing = j.at("record_timing").get<bool>();
  spec.validate();
  return spec;
}

}  // namespace matchmarket
