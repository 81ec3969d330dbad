// Command-line front end.
//
// Subcommands: generate, rank, solve-tu, solve-sw, embed, simulate, exact-sw,
// bvn, experiment.  Global flags: --threads (0 = all cores), --quiet.
// Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 infeasible.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "matchmarket/core.hpp"
#include "matchmarket/datagen.hpp"
#include "matchmarket/embedding.hpp"
#include "matchmarket/examination.hpp"
#include "matchmarket/experiment.hpp"
#include "matchmarket/io.hpp"
#include "matchmarket/policies.hpp"
#include "matchmarket/simulator.hpp"
#include "matchmarket/sw.hpp"
#include "matchmarket/tu.hpp"

namespace {

using namespace matchmarket;
using io::Json;

struct GlobalOptions {
  int threads = 0;
  bool quiet = false;
};

std::ostream& status(const GlobalOptions& global) {
  static std::ofstream devnull;  // never opened: a stream in failed state
  if (global.quiet) {
    devnull.setstate(std::ios::badbit);
    return devnull;
  }
  return std::cerr;
}

PreferenceMatrices<double> load_market(const std::string& path) {
  return io::market_from_json(io::load_json(path));
}

// Accepts a policy file (deterministic or stochastic) or a decompositions
// file; decompositions are the cheap way to simulate a solve-sw mixture.
struct LoadedPolicy {
  std::variant<DeterministicPolicy, StochasticPolicy<double>,
               std::vector<BvnDecomposition<double>>>
      value;
};

LoadedPolicy load_policy_any(const std::string& path) {
  const Json j = io::load_json(path);
  if (j.contains("decompositions"))
    return {io::decompositions_from_json(j)};
  PolicyVariant policy = io::policy_from_json(j);
  if (std::holds_alternative<DeterministicPolicy>(policy))
    return {std::get<DeterministicPolicy>(std::move(policy))};
  return {std::get<StochasticPolicy<double>>(std::move(policy))};
}

StochasticPolicy<double> as_stochastic(
    const std::vector<BvnDecomposition<double>>& decompositions, Index num_jobs) {
  StochasticPolicy<double> policy;
  policy.matrices.reserve(decompositions.size());
  for (const auto& d : decompositions)
    policy.matrices.push_back(d.reconstruct(num_jobs));
  return policy;
}

int run(int argc, char** argv) {
  CLI::App app{"Ranking policies for two-sided matching markets"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --threads/--quiet appear after the subcommand
  GlobalOptions global;
  app.add_option("--threads", global.threads,
                 "Worker threads (0 = one per core)");
  app.add_flag("--quiet", global.quiet, "Suppress progress output");

  // ---- generate ----
  auto* generate = app.add_subcommand("generate", "Generate a synthetic market");
  SyntheticConfig gen_config;
  std::string gen_out;
  generate->add_option("--n", gen_config.n, "Number of employers")->required();
  generate->add_option("--lambda", gen_config.lambda, "Crowding in [0,1]");
  generate->add_option("--seed", gen_config.seed, "RNG seed");
  generate->add_option("--out", gen_out, "Output market file")->required();
  generate->callback([&] {
    const PreferenceMatrices<double> prefs = generate_market(gen_config);
    io::save_json(gen_out, io::market_to_json(prefs));
    status(global) << "wrote market with " << prefs.num_candidates()
                   << " candidates x " << prefs.num_jobs() << " jobs to "
                   << gen_out << "\n";
  });

  // ---- rank ----
  auto* rank = app.add_subcommand("rank", "Build a ranking policy");
  std::string rank_method, rank_market, rank_out;
  double rank_beta = 1.0;
  double rank_tol = 1e-9;
  Index rank_max_iters = 100000;
  bool rank_force = false;
  rank->add_option("--method", rank_method, "naive | reciprocal | tu")
      ->required()
      ->check(CLI::IsMember({"naive", "reciprocal", "tu"}));
  rank->add_option("--market", rank_market, "Market file")->required();
  rank->add_option("--out", rank_out, "Output policy file")->required();
  rank->add_option("--beta", rank_beta, "Gumbel scale (tu)");
  rank->add_option("--tol", rank_tol, "Convergence tolerance (tu)");
  rank->add_option("--max-iters", rank_max_iters, "Sweep limit (tu)");
  rank->add_flag("--force", rank_force,
                 "Rank from the final iterate even if tu did not converge");
  rank->callback([&] {
    const PreferenceMatrices<double> prefs = load_market(rank_market);
    DeterministicPolicy policy;
    if (rank_method == "naive") {
      policy = naive_policy(prefs);
    } else if (rank_method == "reciprocal") {
      policy = reciprocal_policy(prefs);
    } else {
      TUConfig<double> config;
      config.beta = rank_beta;
      config.tol = rank_tol;
      config.max_iters = rank_max_iters;
      const EquilibriumMatching<double> eq = solve_ipfp(prefs, config);
      status(global) << "equilibrium: iterations=" << eq.iterations
                     << " residual=" << eq.residual
                     << " converged=" << (eq.converged ? "true" : "false")
                     << "\n";
      policy = tu_policy(eq, rank_force);
    }
    io::save_json(rank_out, io::policy_to_json(policy));
    status(global) << "wrote " << rank_method << " policy to " << rank_out
                   << "\n";
  });

  // ---- solve-tu ----
  auto* solve_tu = app.add_subcommand(
      "solve-tu", "Solve the transferable-utility matching equilibrium");
  std::string tu_market, tu_out;
  TUConfig<double> tu_config;
  solve_tu->add_option("--market", tu_market, "Market file")->required();
  solve_tu->add_option("--beta", tu_config.beta, "Gumbel scale");
  solve_tu->add_option("--tol", tu_config.tol, "Convergence tolerance");
  solve_tu->add_option("--max-iters", tu_config.max_iters, "Sweep limit");
  solve_tu->add_option("--out", tu_out, "Output equilibrium file")->required();
  solve_tu->callback([&] {
    const PreferenceMatrices<double> prefs = load_market(tu_market);
    const EquilibriumMatching<double> eq = solve_ipfp(prefs, tu_config);
    io::save_json(tu_out, io::equilibrium_to_json(eq));
    if (!eq.converged)
      std::cerr << "warning: not converged after " << eq.iterations
                << " iterations (residual " << eq.residual << ")\n";
    status(global) << "wrote equilibrium (iterations=" << eq.iterations
                   << ", converged=" << (eq.converged ? "true" : "false")
                   << ") to " << tu_out << "\n";
  });

  // ---- solve-sw ----
  auto* solve_sw_cmd = app.add_subcommand(
      "solve-sw", "Maximize the social-welfare lower bound (Frank-Wolfe)");
  std::string sw_market, sw_v = "inv", sw_out, sw_decomp_out, sw_trace_out;
  SWConfig<double> sw_config;
  solve_sw_cmd->add_option("--market", sw_market, "Market file")->required();
  solve_sw_cmd->add_option("--v", sw_v, "Assumed examination: inv | log | exp");
  solve_sw_cmd->add_option("--T", sw_config.timesteps, "Frank-Wolfe steps");
  solve_sw_cmd->add_option("--eta", sw_config.eta, "Learning rate in (0,1]");
  solve_sw_cmd->add_option("--out", sw_out, "Output policy file")->required();
  solve_sw_cmd->add_option("--decomp-out", sw_decomp_out,
                           "Also write the exact permutation mixture");
  solve_sw_cmd->add_option("--trace-out", sw_trace_out,
                           "Write the per-step objective trace (JSON)");
  solve_sw_cmd->callback([&] {
    const PreferenceMatrices<double> prefs = load_market(sw_market);
    sw_config.examination = Examination<double>::from_name(sw_v);
    const SWSolution<double> solution = solve_sw_full(prefs, sw_config);
    for (std::size_t t = 0; t < solution.objective_trace.size(); ++t)
      status(global) << "step " << t
                     << " objective=" << solution.objective_trace[t] << "\n";
    io::save_json(sw_out, io::policy_to_json(solution.policy));
    status(global) << "wrote stochastic policy to " << sw_out << "\n";
    if (!sw_decomp_out.empty()) {
      io::save_json(sw_decomp_out,
                    io::decompositions_to_json(solution.decompositions));
      status(global) << "wrote decompositions to " << sw_decomp_out << "\n";
    }
    if (!sw_trace_out.empty())
      io::save_json(sw_trace_out,
                    Json{{"objective_trace", solution.objective_trace}});
  });

  // ---- embed ----
  auto* embed = app.add_subcommand(
      "embed", "Build dot-product retrieval embeddings from an equilibrium");
  std::string embed_market, embed_eq, embed_features, embed_out;
  embed->add_option("--market", embed_market, "Market file")->required();
  embed->add_option("--eq", embed_eq, "Equilibrium file")->required();
  embed->add_option("--features", embed_features,
                    "Feature maps file (default: identity maps)");
  embed->add_option("--out", embed_out, "Output embeddings file")->required();
  embed->callback([&] {
    const PreferenceMatrices<double> prefs = load_market(embed_market);
    const EquilibriumMatching<double> eq =
        io::equilibrium_from_json(io::load_json(embed_eq));
    const FeatureMaps<double> maps =
        embed_features.empty()
            ? identity_feature_maps(prefs)
            : io::features_from_json(io::load_json(embed_features));
    const EmbeddingSet<double> emb =
        build_embeddings(maps.phi1, maps.phi2, maps.psi1, maps.psi2, eq, &prefs);
    io::save_json(embed_out, io::embeddings_to_json(emb));
    status(global) << "wrote " << emb.dim() << "-dimensional embeddings to "
                   << embed_out << "\n";
  });

  // ---- simulate ----
  auto* simulate = app.add_subcommand(
      "simulate", "Estimate expected matches by Monte-Carlo simulation");
  std::string sim_market, sim_policy, sim_v = "inv", sim_out;
  std::int64_t sim_sims = 10000;
  std::uint64_t sim_seed = 1;
  simulate->add_option("--market", sim_market, "Market file")->required();
  simulate->add_option("--policy", sim_policy,
                       "Policy or decompositions file")->required();
  simulate->add_option("--v", sim_v, "True examination: inv | log | exp");
  simulate->add_option("--sims", sim_sims, "Number of simulations");
  simulate->add_option("--seed", sim_seed, "Base seed");
  simulate->add_option("--out", sim_out, "Output result file")->required();
  simulate->callback([&] {
    const PreferenceMatrices<double> prefs = load_market(sim_market);
    const Examination<double> exam = Examination<double>::from_name(sim_v);
    const LoadedPolicy loaded = load_policy_any(sim_policy);
    const SimulationSummary<double> summary = std::visit(
        [&](const auto& policy) {
          return simulate_policy(policy, prefs, exam, sim_sims, sim_seed,
                                 global.threads);
        },
        loaded.value);
    io::save_json(sim_out,
                  io::result_to_json(summary.estimate,
                                     gini(summary.candidate_match_means),
                                     gini(summary.employer_match_means)));
    status(global) << "mean=" << summary.estimate.mean
                   << " stderr=" << summary.estimate.standard_error << " ("
                   << sim_sims << " sims) -> " << sim_out << "\n";
  });

  // ---- exact-sw ----
  auto* exact = app.add_subcommand(
      "exact-sw", "Exact expected matches (small markets)");
  std::string exact_market, exact_policy, exact_v = "inv", exact_out;
  exact->add_option("--market", exact_market, "Market file")->required();
  exact->add_option("--policy", exact_policy,
                    "Policy or decompositions file")->required();
  exact->add_option("--v", exact_v, "True examination: inv | log | exp");
  exact->add_option("--out", exact_out, "Output file (default: stdout)");
  exact->callback([&] {
    const PreferenceMatrices<double> prefs = load_market(exact_market);
    const Examination<double> exam = Examination<double>::from_name(exact_v);
    const LoadedPolicy loaded = load_policy_any(exact_policy);
    double value = 0;
    if (const auto* det = std::get_if<DeterministicPolicy>(&loaded.value))
      value = exact_sw(*det, prefs, exam);
    else if (const auto* sto = std::get_if<StochasticPolicy<double>>(&loaded.value))
      value = exact_sw(*sto, prefs, exam);
    else
      value = exact_sw(
          as_stochastic(
              std::get<std::vector<BvnDecomposition<double>>>(loaded.value),
              prefs.num_jobs()),
          prefs, exam);
    const Json j{{"exact_sw", value}};
    if (exact_out.empty())
      std::cout << j.dump() << "\n";
    else
      io::save_json(exact_out, j);
  });

  // ---- bvn ----
  auto* bvn = app.add_subcommand(
      "bvn", "Decompose a stochastic policy into a permutation mixture");
  std::string bvn_policy, bvn_out;
  double bvn_eps = 1e-12;
  bvn->add_option("--policy", bvn_policy, "Policy file")->required();
  bvn->add_option("--eps", bvn_eps, "Support threshold");
  bvn->add_option("--out", bvn_out, "Output decompositions file")->required();
  bvn->callback([&] {
    const PolicyVariant policy = io::policy_from_json(io::load_json(bvn_policy));
    std::vector<BvnDecomposition<double>> decompositions;
    if (const auto* det = std::get_if<DeterministicPolicy>(&policy)) {
      for (const Ranking& r : det->rankings) {
        BvnDecomposition<double> single;
        single.terms.push_back({1.0, r});
        decompositions.push_back(std::move(single));
      }
    } else {
      const auto& sto = std::get<StochasticPolicy<double>>(policy);
      decompositions.reserve(sto.matrices.size());
      for (const auto& m : sto.matrices)
        decompositions.push_back(bvn_decompose(m, bvn_eps));
    }
    io::save_json(bvn_out, io::decompositions_to_json(decompositions));
    status(global) << "wrote " << decompositions.size()
                   << " decompositions to " << bvn_out << "\n";
  });

  // ---- experiment ----
  auto* experiment = app.add_subcommand(
      "experiment", "Run a (n, lambda, method, repeat) grid; emit CSV");
  std::string exp_config, exp_out, exp_true_v;
  std::vector<Index> exp_ns;
  std::vector<double> exp_lambdas;
  std::int64_t exp_repeats = -1, exp_sims = -1;
  std::int64_t exp_seed = -1;
  double exp_budget = -1;
  experiment->add_option("--config", exp_config, "Experiment JSON config");
  experiment->add_option("--out", exp_out, "Output CSV file")->required();
  experiment->add_option("--ns", exp_ns, "Market sizes (overrides config)");
  experiment->add_option("--lambdas", exp_lambdas,
                         "Crowding values (overrides config)");
  experiment->add_option("--true-v", exp_true_v, "True examination function");
  experiment->add_option("--repeats", exp_repeats, "Repeats per cell");
  experiment->add_option("--sims", exp_sims, "Simulations per evaluation");
  experiment->add_option("--seed", exp_seed, "Base seed");
  experiment->add_option("--memory-budget-mb", exp_budget,
                         "Skip sw on markets whose solve exceeds this");
  experiment->callback([&] {
    ExperimentSpec spec;
    if (!exp_config.empty()) {
      spec = experiment_spec_from_json(io::load_json(exp_config));
    } else {
      spec.methods = {{"naive", 1.0, "inv"},
                      {"reciprocal", 1.0, "inv"},
                      {"tu", 1.0, "inv"},
                      {"sw", 1.0, "inv"}};
      spec.ns = {100};
      spec.lambdas = {0.5};
    }
    if (!exp_ns.empty()) spec.ns = exp_ns;
    if (!exp_lambdas.empty()) spec.lambdas = exp_lambdas;
    if (!exp_true_v.empty()) spec.true_v = exp_true_v;
    if (exp_repeats >= 0) spec.repeats = exp_repeats;
    if (exp_sims >= 0) spec.sims_per_eval = exp_sims;
    if (exp_seed >= 0) spec.seed = static_cast<std::uint64_t>(exp_seed);
    if (exp_budget >= 0) spec.memory_budget_mb = exp_budget;
    const std::vector<ExperimentRow> rows = run_experiment(spec, global.threads);
    std::ofstream out(exp_out);
    if (!out) throw std::invalid_argument("cannot write file: " + exp_out);
    out << experiment_csv(rows);
    status(global) << "wrote " << rows.size() << " rows to " << exp_out << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the message / help text
    return code == 0 ? 0 : 1;     // normalize all usage failures to 1
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const matchmarket::SizeGuardError& e) {
    std::cerr << "error (infeasible): " << e.what() << "\n";
    return 3;
  } catch (const matchmarket::InfeasibleMatrixError& e) {
    std::cerr << "error (infeasible): " << e.what() << "\n";
    return 3;
  } catch (const matchmarket::NotConvergedError& e) {
    std::cerr << "error (numerical): " << e.what() << "\n";
    return 2;
  } catch (const matchmarket::NumericalError& e) {
    std::cerr << "error (numerical): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
