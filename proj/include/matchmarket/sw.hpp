// Frank-Wolfe maximizer for a lower bound on expected total matches.
//
// Each candidate c gets a doubly stochastic matrix M_c with M_c(j, k) the
// probability that job j is shown at slot k.  The objective, a lower bound on
// the expected number of matches in the position-based market model, is
//
//   F({M_c}) = sum_{c,j} p_cj(c,j) * p_jc(j,c) * v(1 + R_cj) * E_c(j)
//
// where E_c(j) = sum_k M_c(j,k) * v(k+1) is the expected examination of job j
// by candidate c, and R_cj = sum_{c' preferred to c by j} p_cj(c',j) * E_c'(j)
// is the expected volume of competing applications from strictly preferred
// candidates.  Candidates with equal employer value share one tie block: they
// see the same R and do not compete with each other.
//
// F is concave in each E_c(j) (v is convex non-increasing on x >= 1 for the
// built-in examination functions), and Frank-Wolfe over the product of
// Birkhoff polytopes needs only a linear maximization per step, which here
// reduces to a sort (see solve_sw_full).

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "matchmarket/bvn.hpp"
#include "matchmarket/core.hpp"
#include "matchmarket/examination.hpp"

namespace matchmarket {

template <typename Scalar>
struct SWConfig {
  Index timesteps = 50;
  Scalar eta = Scalar(0.2);
  Examination<Scalar> examination = Examination<Scalar>::inv();

  void validate() const {
    if (timesteps < 1) throw std::invalid_argument("SWConfig: timesteps must be >= 1");
    if (!(eta > Scalar(0)) || !(eta <= Scalar(1)))
      throw std::invalid_argument("SWConfig: eta must lie in (0, 1]");
  }
};

// Result of the Frank-Wolfe run.  `decompositions[c]` expresses policy
// matrix c as a convex combination of permutations (exact by construction:
// the iterate is an explicit mixture of the uniform start and the visited
// vertices).  `objective_trace[t]` is the objective of the iterate before
// step t; the last entry is the objective of the returned policy.
template <typename Scalar>
struct SWSolution {
  StochasticPolicy<Scalar> policy;
  std::vector<BvnDecomposition<Scalar>> decompositions;
  std::vector<Scalar> objective_trace;
};

namespace detail {

// Objective value and, optionally, the gradient dF/dE as a C x J matrix.
template <typename Scalar>
struct SwParts {
  Scalar objective = Scalar(0);
  MatrixX<Scalar> grad;
};

// Single pass over employers: sorts candidates by employer value, walks tie
// blocks forward accumulating the competition prefix R, then backward for the
// chain rule part of the gradient (E_c(j) raises R for every candidate the
// employer likes less, damping their match probability through v').
template <typename Scalar>
SwParts<Scalar> sw_parts(const PreferenceMatrices<Scalar>& prefs,
                         const MatrixX<Scalar>& exposure,
                         const Examination<Scalar>& exam, bool want_grad) {
  const Index num_candidates = prefs.num_candidates();
  const Index num_jobs = prefs.num_jobs();
  if (exposure.rows() != num_candidates || exposure.cols() != num_jobs)
    throw std::invalid_argument("sw_parts: exposure has wrong shape");

  SwParts<Scalar> parts;
  if (want_grad) parts.grad = MatrixX<Scalar>::Zero(num_candidates, num_jobs);

  std::vector<Index> order(static_cast<std::size_t>(num_candidates));
  std::vector<Scalar> chain(static_cast<std::size_t>(num_candidates));

  for (Index j = 0; j < num_jobs; ++j) {
    std::iota(order.begin(), order.end(), Index(0));
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      const Scalar va = prefs.p_jc(j, a);
      const Scalar vb = prefs.p_jc(j, b);
      if (va != vb) return va > vb;
      return a < b;
    });

    // Forward over tie blocks: same employer value => same competition R.
    Scalar prefix = Scalar(0);
    Index i = 0;
    while (i < num_candidates) {
      Index block_end = i + 1;
      while (block_end < num_candidates &&
             prefs.p_jc(j, order[static_cast<std::size_t>(block_end)]) ==
                 prefs.p_jc(j, order[static_cast<std::size_t>(i)]))
        ++block_end;
      const Scalar r = prefix;
      const Scalar match_prob = exam.value(Scalar(1) + r);
      Scalar block_apps = Scalar(0);
      Scalar slope = Scalar(0);
      if (want_grad) slope = exam.derivative(Scalar(1) + r);
      for (Index t = i; t < block_end; ++t) {
        const Index c = order[static_cast<std::size_t>(t)];
        const Scalar rel = prefs.p_cj(c, j);
        const Scalar val = prefs.p_jc(j, c);
        const Scalar e = exposure(c, j);
        parts.objective += rel * val * match_prob * e;
        if (want_grad) {
          parts.grad(c, j) = rel * val * match_prob;
          chain[static_cast<std::size_t>(t)] = rel * val * slope * e;
        }
        block_apps += rel * e;
      }
      prefix += block_apps;
      i = block_end;
    }

    if (!want_grad) continue;

    // Backward over the same blocks: candidate c additionally moves the
    // competition term of every strictly less preferred candidate c', with
    // sensitivity p_cj(c,j) * d/dR [ rel' * val' * v(1+R') * E' ].
    Scalar suffix = Scalar(0);
    Index end = num_candidates;
    while (end > 0) {
      Index start = end - 1;
      while (start > 0 &&
             prefs.p_jc(j, order[static_cast<std::size_t>(start - 1)]) ==
                 prefs.p_jc(j, order[static_cast<std::size_t>(end - 1)]))
        --start;
      Scalar block_sum = Scalar(0);
      for (Index t = start; t < end; ++t)
        block_sum += chain[static_cast<std::size_t>(t)];
      for (Index t = start; t < end; ++t) {
        const Index c = order[static_cast<std::size_t>(t)];
        parts.grad(c, j) += prefs.p_cj(c, j) * suffix;
      }
      suffix += block_sum;
      end = start;
    }
  }
  return parts;
}

// v at ranks 1..J as a vector indexed by slot (0-based slot k -> v(k+1)).
template <typename Scalar>
VectorX<Scalar> slot_values(const Examination<Scalar>& exam, Index num_jobs) {
  VectorX<Scalar> v(num_jobs);
  for (Index k = 0; k < num_jobs; ++k) v(k) = exam.value(Scalar(k + 1));
  return v;
}

template <typename Scalar>
void check_policy_shape(const PreferenceMatrices<Scalar>& prefs,
                        const StochasticPolicy<Scalar>& policy,
                        const char* where) {
  const Index num_candidates = prefs.num_candidates();
  const Index num_jobs = prefs.num_jobs();
  if (static_cast<Index>(policy.matrices.size()) != num_candidates)
    throw std::invalid_argument(std::string(where) +
                                ": policy must have one matrix per candidate");
  for (const auto& m : policy.matrices)
    if (m.rows() != num_jobs || m.cols() != num_jobs)
      throw std::invalid_argument(std::string(where) +
                                  ": policy matrices must be J x J");
}

// Stacked exposures, one candidate per row.
template <typename Scalar>
MatrixX<Scalar> exposure_matrix(const StochasticPolicy<Scalar>& policy,
                                const VectorX<Scalar>& v) {
  const Index num_candidates = static_cast<Index>(policy.matrices.size());
  const Index num_jobs = v.size();
  MatrixX<Scalar> exposure(num_candidates, num_jobs);
  for (Index c = 0; c < num_candidates; ++c)
    exposure.row(c) =
        (policy.matrices[static_cast<std::size_t>(c)] * v).transpose();
  return exposure;
}

}  // namespace detail

// Expected examination of each job under one candidate's matrix:
// entry j = sum_k M_c(j, k) * v(k + 1) for 0-based slot k.
template <typename Scalar>
VectorX<Scalar> expected_exposure(const MatrixX<Scalar>& m,
                                  const Examination<Scalar>& exam) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument("expected_exposure: matrix must be square");
  return m * detail::slot_values(exam, m.cols());
}

// Lower bound objective for a stochastic ranking policy.
template <typename Scalar>
Scalar approx_sw(const StochasticPolicy<Scalar>& policy,
                 const PreferenceMatrices<Scalar>& prefs,
                 const Examination<Scalar>& exam) {
  prefs.validate();
  detail::check_policy_shape(prefs, policy, "approx_sw");
  const VectorX<Scalar> v = detail::slot_values(exam, prefs.num_jobs());
  const MatrixX<Scalar> exposure = detail::exposure_matrix(policy, v);
  return detail::sw_parts(prefs, exposure, exam, /*want_grad=*/false).objective;
}

// Gradient of approx_sw with respect to each policy matrix.  Because the
// objective touches M_c only through E_c = M_c * v, each per-candidate
// gradient is the rank-one matrix dF/dE(c, .)^T * v^T.
template <typename Scalar>
std::vector<MatrixX<Scalar>> grad_approx_sw(
    const StochasticPolicy<Scalar>& policy,
    const PreferenceMatrices<Scalar>& prefs, const Examination<Scalar>& exam) {
  prefs.validate();
  detail::check_policy_shape(prefs, policy, "grad_approx_sw");
  const VectorX<Scalar> v = detail::slot_values(exam, prefs.num_jobs());
  const MatrixX<Scalar> exposure = detail::exposure_matrix(policy, v);
  const detail::SwParts<Scalar> parts =
      detail::sw_parts(prefs, exposure, exam, /*want_grad=*/true);
  std::vector<MatrixX<Scalar>> grads;
  grads.reserve(static_cast<std::size_t>(prefs.num_candidates()));
  for (Index c = 0; c < prefs.num_candidates(); ++c)
    grads.push_back(parts.grad.row(c).transpose() * v.transpose());
  return grads;
}

// Frank-Wolfe with constant step size.  Returns the final mixture, its exact
// permutation decomposition, and the objective trace (timesteps + 1 values).
//
// The linear maximization step asks, per candidate, for the permutation
// matrix P maximizing <Grad_c, P> where Grad_c(j, k) = g(j) * v(k+1) with
// g = dF/dE(c, .).  For such rank-one costs the optimum pairs the jobs in
// decreasing g order with the slots in decreasing v order (rearrangement
// inequality, valid for arbitrary signs), i.e. it is the ranking that sorts
// jobs by gradient score.  No general assignment solve is needed.
template <typename Scalar>
SWSolution<Scalar> solve_sw_full(const PreferenceMatrices<Scalar>& prefs,
                                 const SWConfig<Scalar>& config = {}) {
  prefs.validate();
  config.validate();
  if (config.examination.kind() == ExaminationKind::table)
    throw std::invalid_argument(
        "solve_sw: table examination has no derivative; use inv, log or exp");

  const Index num_candidates = prefs.num_candidates();
  const Index num_jobs = prefs.num_jobs();
  const Index timesteps = config.timesteps;
  const Scalar eta = config.eta;
  const VectorX<Scalar> v = detail::slot_values(config.examination, num_jobs);

  // Uniform start: every row of M_c is 1/J, so every exposure is mean(v).
  MatrixX<Scalar> exposure =
      MatrixX<Scalar>::Constant(num_candidates, num_jobs, v.mean());

  // Visited vertices, one ranking per candidate per step.
  std::vector<std::vector<Ranking>> atoms(
      static_cast<std::size_t>(num_candidates));
  for (auto& a : atoms) a.reserve(static_cast<std::size_t>(timesteps));

  SWSolution<Scalar> solution;
  solution.objective_trace.reserve(static_cast<std::size_t>(timesteps) + 1);

  for (Index t = 0; t < timesteps; ++t) {
    const detail::SwParts<Scalar> parts =
        detail::sw_parts(prefs, exposure, config.examination, /*want_grad=*/true);
    solution.objective_trace.push_back(parts.objective);
    for (Index c = 0; c < num_candidates; ++c) {
      Ranking ranking = ranking_from_scores(parts.grad.row(c));
      // M_c <- (1 - eta) M_c + eta P; E_c is linear in M_c.
      exposure.row(c) *= (Scalar(1) - eta);
      for (Index k = 0; k < num_jobs; ++k)
        exposure(c, ranking[static_cast<std::size_t>(k)]) += eta * v(k);
      atoms[static_cast<std::size_t>(c)].push_back(std::move(ranking));
    }
  }
  solution.objective_trace.push_back(
      detail::sw_parts(prefs, exposure, config.examination, /*want_grad=*/false)
          .objective);

  // Unroll the recursion M_T = (1-eta)^T U + sum_t eta (1-eta)^(T-1-t) P_t.
  // The uniform start U is itself the uniform mixture of the J cyclic shift
  // permutations, so the decomposition is exact with at most T + J terms.
  std::vector<Scalar> atom_weight(static_cast<std::size_t>(timesteps));
  {
    Scalar tail = eta;  // eta * (1-eta)^(T-1-t), built backwards
    for (Index t = timesteps - 1; t >= 0; --t) {
      atom_weight[static_cast<std::size_t>(t)] = tail;
      tail *= (Scalar(1) - eta);
    }
  }
  const Scalar uniform_weight =
      std::pow(Scalar(1) - eta, Scalar(timesteps)) / Scalar(num_jobs);

  solution.decompositions.resize(static_cast<std::size_t>(num_candidates));
  solution.policy.matrices.resize(static_cast<std::size_t>(num_candidates));
  for (Index c = 0; c < num_candidates; ++c) {
    BvnDecomposition<Scalar>& decomp =
        solution.decompositions[static_cast<std::size_t>(c)];
    decomp.terms.reserve(static_cast<std::size_t>(timesteps + num_jobs));
    for (Index t = 0; t < timesteps; ++t) {
      const Scalar w = atom_weight[static_cast<std::size_t>(t)];
      if (w > Scalar(0))
        decomp.terms.push_back(
            {w, atoms[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)]});
    }
    if (uniform_weight > Scalar(0)) {
      for (Index s = 0; s < num_jobs; ++s) {
        Ranking shift(static_cast<std::size_t>(num_jobs));
        for (Index k = 0; k < num_jobs; ++k)
          shift[static_cast<std::size_t>(k)] = (k + s) % num_jobs;
        decomp.terms.push_back({uniform_weight, std::move(shift)});
      }
    }
    // Materialize the matrix from the decomposition so that reconstruct()
    // agrees with the policy bit for bit.
    solution.policy.matrices[static_cast<std::size_t>(c)] =
        decomp.reconstruct(num_jobs);
  }
  return solution;
}

template <typename Scalar>
StochasticPolicy<Scalar> solve_sw(const PreferenceMatrices<Scalar>& prefs,
                                  const SWConfig<Scalar>& config = {}) {
  return solve_sw_full(prefs, config).policy;
}

}  // namespace matchmarket
