// Monte-Carlo simulation of the two-stage position-based matching process,
// an exact expected-matches oracle, and the Gini inequality metric.
//
// Stage 1: candidate c examines slot k of their ranked list with probability
// v(k+1) and applies to the job there with probability p_cj(c, j), all draws
// independent.  Stage 2: employer j orders its applicants by p_jc descending
// (ties: ascending candidate index) and matches the applicant at position r
// with probability v(r) * p_jc(j, c), again independently.  A candidate can
// match several employers and vice versa; the welfare metric is the total
// match count.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "matchmarket/bvn.hpp"
#include "matchmarket/core.hpp"
#include "matchmarket/examination.hpp"
#include "matchmarket/parallel.hpp"
#include "matchmarket/rng.hpp"
#include "matchmarket/sw.hpp"

namespace matchmarket {

struct MarketOutcome {
  std::int64_t total_matches = 0;
  std::vector<std::int64_t> candidate_matches;
  std::vector<std::int64_t> employer_matches;
};

// `standard_error` is serialized under the key "stderr"; the natural member
// name collides with the <cstdio> macro.
template <typename Scalar>
struct SWEstimate {
  Scalar mean = Scalar(0);
  Scalar standard_error = Scalar(0);
  std::int64_t n_sims = 0;
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct SimulationSummary {
  SWEstimate<Scalar> estimate;
  VectorX<Scalar> candidate_match_means;
  VectorX<Scalar> employer_match_means;
};

namespace detail {

// Examination probabilities by 1-based position, padded so stage 2 can index
// up to one applicant per candidate.  Positions beyond a table's length are 0.
template <typename Scalar>
std::vector<Scalar> position_values(const Examination<Scalar>& exam,
                                    Index max_position) {
  std::vector<Scalar> v(static_cast<std::size_t>(max_position) + 1, Scalar(0));
  for (Index r = 1; r <= max_position; ++r)
    v[static_cast<std::size_t>(r)] = exam.value(Scalar(r));
  return v;
}

// One market realization.  Draw order is fixed — stage 1 over candidates in
// index order, each scanning slots top to bottom; stage 2 over employers in
// index order, each scanning applicant positions — with exactly one uniform
// per (candidate, slot) and per (employer, position), so the consumed stream
// never depends on earlier outcomes.
template <typename Scalar>
void simulate_core(const std::vector<Ranking>& rankings,
                   const PreferenceMatrices<Scalar>& prefs,
                   const std::vector<Scalar>& position_value, SplitMix64& rng,
                   std::vector<std::vector<Index>>& applicants,
                   std::int64_t* candidate_matches,
                   std::int64_t* employer_matches, std::int64_t& total) {
  const Index num_candidates = prefs.num_candidates();
  const Index num_jobs = prefs.num_jobs();
  for (auto& a : applicants) a.clear();
  for (Index c = 0; c < num_candidates; ++c) {
    const Ranking& ranking = rankings[static_cast<std::size_t>(c)];
    for (Index k = 0; k < num_jobs; ++k) {
      const Index j = ranking[static_cast<std::size_t>(k)];
      const Scalar prob =
          position_value[static_cast<std::size_t>(k) + 1] * prefs.p_cj(c, j);
      if (bernoulli(rng, prob))
        applicants[static_cast<std::size_t>(j)].push_back(c);
    }
  }
  for (Index j = 0; j < num_jobs; ++j) {
    auto& pool = applicants[static_cast<std::size_t>(j)];
    std::sort(pool.begin(), pool.end(), [&](Index a, Index b) {
      const Scalar va = prefs.p_jc(j, a);
      const Scalar vb = prefs.p_jc(j, b);
      if (va != vb) return va > vb;
      return a < b;
    });
    for (std::size_t r = 0; r < pool.size(); ++r) {
      const Index c = pool[r];
      const Scalar prob = position_value[r + 1] * prefs.p_jc(j, c);
      if (bernoulli(rng, prob)) {
        ++total;
        ++candidate_matches[c];
        ++employer_matches[j];
      }
    }
  }
}

template <typename Scalar>
void check_rankings(const std::vector<Ranking>& rankings,
                    const PreferenceMatrices<Scalar>& prefs,
                    const char* where) {
  if (static_cast<Index>(rankings.size()) != prefs.num_candidates())
    throw std::invalid_argument(std::string(where) +
                                ": one ranking per candidate required");
  for (const Ranking& r : rankings)
    if (static_cast<Index>(r.size()) != prefs.num_jobs())
      throw std::invalid_argument(std::string(where) +
                                  ": ranking length must equal job count");
}

// Provider returning the same rankings every simulation.
struct FixedRankingsProvider {
  const std::vector<Ranking>* rankings;
  const std::vector<Ranking>& operator()(SplitMix64&) { return *rankings; }
};

// Provider sampling one ranking per candidate (in candidate index order,
// one uniform each) from precomputed permutation mixtures.
template <typename Scalar>
struct SampledRankingsProvider {
  const std::vector<BvnDecomposition<Scalar>>* decompositions;
  std::vector<Ranking> buffer;
  const std::vector<Ranking>& operator()(SplitMix64& rng) {
    buffer.resize(decompositions->size());
    for (std::size_t c = 0; c < decompositions->size(); ++c)
      buffer[c] = sample_ranking((*decompositions)[c], rng);
    return buffer;
  }
};

// Shared driver: simulation i uses an rng derived from (seed, i) alone, so
// any thread count and any execution order give identical results.  All
// accumulation is integer (exact, order-free); the float statistics are
// computed serially in index order at the end.
template <typename Scalar, typename Provider>
SimulationSummary<Scalar> run_simulations(Provider provider,
                                          const PreferenceMatrices<Scalar>& prefs,
                                          const Examination<Scalar>& exam,
                                          std::int64_t n_sims,
                                          std::uint64_t seed, int threads) {
  if (n_sims < 1)
    throw std::invalid_argument("estimate_sw: n_sims must be >= 1");
  prefs.validate();
  const Index num_candidates = prefs.num_candidates();
  const Index num_jobs = prefs.num_jobs();
  const std::vector<Scalar> position_value =
      position_values(exam, std::max(num_candidates, num_jobs));

  const int workers = resolve_threads(threads);
  std::vector<std::int64_t> totals(static_cast<std::size_t>(n_sims), 0);
  std::vector<std::vector<std::int64_t>> cand_partials(
      static_cast<std::size_t>(workers)),
      emp_partials(static_cast<std::size_t>(workers));

  parallel_chunks(n_sims, workers, [&](int chunk, std::int64_t begin,
                                       std::int64_t end) {
    auto local_provider = provider;
    std::vector<std::int64_t>& cand = cand_partials[static_cast<std::size_t>(chunk)];
    std::vector<std::int64_t>& emp = emp_partials[static_cast<std::size_t>(chunk)];
    cand.assign(static_cast<std::size_t>(num_candidates), 0);
    emp.assign(static_cast<std::size_t>(num_jobs), 0);
    std::vector<std::vector<Index>> applicants(
        static_cast<std::size_t>(num_jobs));
    for (std::int64_t i = begin; i < end; ++i) {
      SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
      const std::vector<Ranking>& rankings = local_provider(rng);
      std::int64_t total = 0;
      simulate_core(rankings, prefs, position_value, rng, applicants,
                    cand.data(), emp.data(), total);
      totals[static_cast<std::size_t>(i)] = total;
    }
  });

  SimulationSummary<Scalar> summary;
  summary.candidate_match_means = VectorX<Scalar>::Zero(num_candidates);
  summary.employer_match_means = VectorX<Scalar>::Zero(num_jobs);
  std::vector<std::int64_t> cand_sum(static_cast<std::size_t>(num_candidates), 0);
  std::vector<std::int64_t> emp_sum(static_cast<std::size_t>(num_jobs), 0);
  for (const auto& part : cand_partials)
    for (std::size_t c = 0; c < part.size(); ++c) cand_sum[c] += part[c];
  for (const auto& part : emp_partials)
    for (std::size_t j = 0; j < part.size(); ++j) emp_sum[j] += part[j];

  std::int64_t grand_total = 0;
  for (std::int64_t t : totals) grand_total += t;
  const Scalar n = Scalar(n_sims);
  const Scalar mean = Scalar(grand_total) / n;
  Scalar ss = Scalar(0);
  for (std::int64_t t : totals) {
    const Scalar d = Scalar(t) - mean;
    ss += d * d;
  }
  const Scalar variance = n_sims > 1 ? ss / Scalar(n_sims - 1) : Scalar(0);

  summary.estimate.mean = mean;
  summary.estimate.standard_error = std::sqrt(variance / n);
  summary.estimate.n_sims = n_sims;
  summary.estimate.seed = seed;
  for (Index c = 0; c < num_candidates; ++c)
    summary.candidate_match_means(c) =
        Scalar(cand_sum[static_cast<std::size_t>(c)]) / n;
  for (Index j = 0; j < num_jobs; ++j)
    summary.employer_match_means(j) =
        Scalar(emp_sum[static_cast<std::size_t>(j)]) / n;
  return summary;
}

}  // namespace detail

// One market realization under fixed rankings; consumes draws from `rng` in
// the documented fixed order.
template <typename Scalar>
MarketOutcome simulate_once(const std::vector<Ranking>& rankings,
                            const PreferenceMatrices<Scalar>& prefs,
                            const Examination<Scalar>& exam, SplitMix64& rng) {
  prefs.validate();
  detail::check_rankings(rankings, prefs, "simulate_once");
  const Index num_candidates = prefs.num_candidates();
  const Index num_jobs = prefs.num_jobs();
  const std::vector<Scalar> position_value =
      detail::position_values(exam, std::max(num_candidates, num_jobs));
  MarketOutcome outcome;
  outcome.candidate_matches.assign(static_cast<std::size_t>(num_candidates), 0);
  outcome.employer_matches.assign(static_cast<std::size_t>(num_jobs), 0);
  std::vector<std::vector<Index>> applicants(static_cast<std::size_t>(num_jobs));
  detail::simulate_core(rankings, prefs, position_value, rng, applicants,
                        outcome.candidate_matches.data(),
                        outcome.employer_matches.data(),
                        outcome.total_matches);
  return outcome;
}

template <typename Scalar>
MarketOutcome simulate_once(const DeterministicPolicy& policy,
                            const PreferenceMatrices<Scalar>& prefs,
                            const Examination<Scalar>& exam, SplitMix64& rng) {
  return simulate_once(policy.rankings, prefs, exam, rng);
}

// Mean, standard error and per-user match rates over n_sims independent
// simulations (simulation i seeded by (seed, i)).
template <typename Scalar>
SimulationSummary<Scalar> simulate_policy(const DeterministicPolicy& policy,
                                          const PreferenceMatrices<Scalar>& prefs,
                                          const Examination<Scalar>& exam,
                                          std::int64_t n_sims,
                                          std::uint64_t seed,
                                          int threads = 0) {
  detail::check_rankings(policy.rankings, prefs, "simulate_policy");
  return detail::run_simulations(
      detail::FixedRankingsProvider{&policy.rankings}, prefs, exam, n_sims,
      seed, threads);
}

// Stochastic policies are simulated by drawing one ranking per candidate per
// simulation from a permutation mixture.  Pass the mixture directly when the
// solver already produced one; decomposing a dense stochastic matrix with
// bvn_decompose first can produce very many terms.
template <typename Scalar>
SimulationSummary<Scalar> simulate_policy(
    const std::vector<BvnDecomposition<Scalar>>& decompositions,
    const PreferenceMatrices<Scalar>& prefs, const Examination<Scalar>& exam,
    std::int64_t n_sims, std::uint64_t seed, int threads = 0) {
  if (static_cast<Index>(decompositions.size()) != prefs.num_candidates())
    throw std::invalid_argument(
        "simulate_policy: one decomposition per candidate required");
  for (const auto& d : decompositions) {
    if (d.terms.empty())
      throw std::invalid_argument("simulate_policy: empty decomposition");
    for (const auto& term : d.terms)
      if (static_cast<Index>(term.permutation.size()) != prefs.num_jobs())
        throw std::invalid_argument(
            "simulate_policy: permutation length must equal job count");
  }
  return detail::run_simulations(
      detail::SampledRankingsProvider<Scalar>{&decompositions, {}}, prefs,
      exam, n_sims, seed, threads);
}

template <typename Scalar>
SimulationSummary<Scalar> simulate_policy(const StochasticPolicy<Scalar>& policy,
                                          const PreferenceMatrices<Scalar>& prefs,
                                          const Examination<Scalar>& exam,
                                          std::int64_t n_sims,
                                          std::uint64_t seed, int threads = 0,
                                          Scalar bvn_eps = Scalar(1e-12)) {
  std::vector<BvnDecomposition<Scalar>> decompositions;
  decompositions.reserve(policy.matrices.size());
  for (const auto& m : policy.matrices)
    decompositions.push_back(bvn_decompose(m, bvn_eps));
  return simulate_policy(decompositions, prefs, exam, n_sims, seed, threads);
}

template <typename Policy, typename Scalar>
SWEstimate<Scalar> estimate_sw(const Policy& policy,
                               const PreferenceMatrices<Scalar>& prefs,
                               const Examination<Scalar>& exam,
                               std::int64_t n_sims, std::uint64_t seed,
                               int threads = 0) {
  return simulate_policy(policy, prefs, exam, n_sims, seed, threads).estimate;
}

// ---------------------------------------------------------------------------
// Exact expected-matches oracle.
//
// For each (candidate, employer) pair, the application event has probability
// q(c, j) = p_cj(c, j) * (expected examination of j in c's ranking), and
// applications are independent across candidates.  Employer j ranks applicant
// c below exactly the applicants from the set {c' : p_jc(j, c') > p_jc(j, c),
// or equal with c' < c} — mirroring the simulator's sort — so c's match
// probability is q(c,j) * p_jc(j,c) * E[v(1 + B)] with B the Poisson-binomial
// count of competitors who applied, evaluated by direct convolution.

template <typename Scalar>
struct ExactMatchRates {
  Scalar total = Scalar(0);
  VectorX<Scalar> candidate_rates;
  VectorX<Scalar> employer_rates;
};

// Application probabilities q(c, j), one row per candidate.
template <typename Scalar>
MatrixX<Scalar> application_probabilities(const DeterministicPolicy& policy,
                                          const PreferenceMatrices<Scalar>& prefs,
                                          const Examination<Scalar>& exam) {
  detail::check_rankings(policy.rankings, prefs, "application_probabilities");
  const Index num_candidates = prefs.num_candidates();
  const Index num_jobs = prefs.num_jobs();
  const std::vector<Scalar> position_value =
      detail::position_values(exam, num_jobs);
  MatrixX<Scalar> q(num_candidates, num_jobs);
  for (Index c = 0; c < num_candidates; ++c) {
    const Ranking& ranking = policy.rankings[static_cast<std::size_t>(c)];
    for (Index k = 0; k < num_jobs; ++k) {
      const Index j = ranking[static_cast<std::size_t>(k)];
      q(c, j) = position_value[static_cast<std::size_t>(k) + 1] * prefs.p_cj(c, j);
    }
  }
  return q;
}

template <typename Scalar>
MatrixX<Scalar> application_probabilities(const StochasticPolicy<Scalar>& policy,
                                          const PreferenceMatrices<Scalar>& prefs,
                                          const Examination<Scalar>& exam) {
  detail::check_policy_shape(prefs, policy, "application_probabilities");
  const VectorX<Scalar> v = detail::slot_values(exam, prefs.num_jobs());
  return detail::exposure_matrix(policy, v).cwiseProduct(prefs.p_cj);
}

namespace detail {

template <typename Scalar>
ExactMatchRates<Scalar> exact_rates_from_q(const MatrixX<Scalar>& q,
                                           const PreferenceMatrices<Scalar>& prefs,
                                           const Examination<Scalar>& exam) {
  const Index num_candidates = prefs.num_candidates();
  const Index num_jobs = prefs.num_jobs();
  const std::vector<Scalar> position_value =
      position_values(exam, num_candidates);

  ExactMatchRates<Scalar> rates;
  rates.candidate_rates = VectorX<Scalar>::Zero(num_candidates);
  rates.employer_rates = VectorX<Scalar>::Zero(num_jobs);

  std::vector<Index> order(static_cast<std::size_t>(num_candidates));
  std::vector<Scalar> dp;
  dp.reserve(static_cast<std::size_t>(num_candidates) + 1);
  for (Index j = 0; j < num_jobs; ++j) {
    std::iota(order.begin(), order.end(), Index(0));
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      const Scalar va = prefs.p_jc(j, a);
      const Scalar vb = prefs.p_jc(j, b);
      if (va != vb) return va > vb;
      return a < b;
    });
    dp.assign(1, Scalar(1));  // distribution of "competitors who applied"
    for (Index c : order) {
      const Scalar qc = q(c, j);
      Scalar expected_v = Scalar(0);
      for (std::size_t m = 0; m < dp.size(); ++m)
        expected_v += dp[m] * position_value[m + 1];
      const Scalar match_prob = qc * prefs.p_jc(j, c) * expected_v;
      rates.total += match_prob;
      rates.candidate_rates(c) += match_prob;
      rates.employer_rates(j) += match_prob;
      dp.push_back(Scalar(0));
      for (std::size_t m = dp.size() - 1; m >= 1; --m)
        dp[m] = dp[m] * (Scalar(1) - qc) + dp[m - 1] * qc;
      dp[0] *= (Scalar(1) - qc);
    }
  }
  return rates;
}

template <typename Scalar>
void check_exact_guard(const PreferenceMatrices<Scalar>& prefs) {
  const Index cells = prefs.num_candidates() * prefs.num_jobs();
  if (cells > Index(1000000))
    throw SizeGuardError(
        "exact_sw: |C| * |J| = " + std::to_string(cells) +
        " exceeds 1000000; use estimate_sw (Monte-Carlo) instead");
}

}  // namespace detail

template <typename PolicyT, typename Scalar>
ExactMatchRates<Scalar> exact_match_rates(const PolicyT& policy,
                                          const PreferenceMatrices<Scalar>& prefs,
                                          const Examination<Scalar>& exam) {
  prefs.validate();
  detail::check_exact_guard(prefs);
  return detail::exact_rates_from_q(
      application_probabilities(policy, prefs, exam), prefs, exam);
}

template <typename PolicyT, typename Scalar>
Scalar exact_sw(const PolicyT& policy, const PreferenceMatrices<Scalar>& prefs,
                const Examination<Scalar>& exam) {
  return exact_match_rates(policy, prefs, exam).total;
}

// ---------------------------------------------------------------------------
// Gini index of a nonnegative allocation:
//   G = sum_{i,k} |x_i - x_k| / (2 n^2 mean),
// computed via the sorted form (2 sum_i i*x_(i) - (n-1) S) / (n S) with
// 0-based ascending i.  All-zero input returns 0 by convention.

template <typename Scalar>
Scalar gini(std::vector<Scalar> values) {
  if (values.empty()) throw std::invalid_argument("gini: empty input");
  Scalar sum = Scalar(0);
  for (Scalar x : values) {
    if (x < Scalar(0))
      throw std::invalid_argument("gini: values must be nonnegative");
    sum += x;
  }
  if (sum == Scalar(0)) return Scalar(0);
  std::sort(values.begin(), values.end());
  Scalar weighted = Scalar(0);
  for (std::size_t i = 0; i < values.size(); ++i)
    weighted += Scalar(i) * values[i];
  const Scalar n = Scalar(values.size());
  return (Scalar(2) * weighted - (n - Scalar(1)) * sum) / (n * sum);
}

template <typename Scalar>
Scalar gini(const VectorX<Scalar>& values) {
  return gini(std::vector<Scalar>(values.data(), values.data() + values.size()));
}

}  // namespace matchmarket
