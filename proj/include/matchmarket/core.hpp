#pragma once

// Shared domain types and conventions: preference matrices, ranking policies,
// the project-wide error taxonomy, and the global tie-break rule (descending
// score, ties broken by ascending index; 0-based indices everywhere).

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace matchmarket {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// A ranking is a permutation of job indices, best first: ranking[k] is the job
// shown at position k+1.
using Ranking = std::vector<Index>;

// Numerical breakdown inside a solver (overflow, degenerate values).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative solver hit its iteration cap and the caller did not opt in to
// using the unconverged iterate.
struct NotConvergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input matrix violates a structural requirement discovered mid-algorithm
// (e.g. a claimed doubly stochastic matrix with no perfect matching left).
struct InfeasibleMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A computation was refused because the instance exceeds a resource guard.
struct SizeGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Indices sorted by score descending; ties broken by ascending index. This is
// the single ordering convention used by every policy, the simulator's
// employer side, and the exact oracle.
template <typename Derived>
Ranking ranking_from_scores(const Eigen::DenseBase<Derived>& scores) {
  Ranking order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    auto sa = scores.derived()(a), sb = scores.derived()(b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return order;
}

inline bool is_permutation_of_n(const Ranking& r, Index n) {
  if (static_cast<Index>(r.size()) != n) return false;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Index j : r) {
    if (j < 0 || j >= n || seen[static_cast<std::size_t>(j)]) return false;
    seen[static_cast<std::size_t>(j)] = true;
  }
  return true;
}

// The two unilateral score matrices. p_cj(c, j) is candidate c's preference
// for job j; p_jc(j, c) is employer j's preference for candidate c.
template <typename Scalar>
struct PreferenceMatrices {
  MatrixX<Scalar> p_cj;  // |C| x |J|
  MatrixX<Scalar> p_jc;  // |J| x |C|

  Index num_candidates() const { return p_cj.rows(); }
  Index num_jobs() const { return p_cj.cols(); }

  void validate() const {
    if (p_cj.rows() == 0 || p_cj.cols() == 0)
      throw std::invalid_argument("preference matrices must be non-empty");
    if (p_jc.rows() != p_cj.cols() || p_jc.cols() != p_cj.rows())
      throw std::invalid_argument(
          "preference matrix shapes are inconsistent: p_cj is " +
          std::to_string(p_cj.rows()) + "x" + std::to_string(p_cj.cols()) +
          " but p_jc is " + std::to_string(p_jc.rows()) + "x" +
          std::to_string(p_jc.cols()));
    auto in_unit = [](const MatrixX<Scalar>& m) {
      return (m.array() >= Scalar(0)).all() && (m.array() <= Scalar(1)).all();
    };
    if (!in_unit(p_cj) || !in_unit(p_jc))
      throw std::invalid_argument("preference scores must lie in [0,1]");
  }
};

// One ranked list of jobs per candidate.
struct DeterministicPolicy {
  std::vector<Ranking> rankings;

  Index num_candidates() const { return static_cast<Index>(rankings.size()); }

  void validate(Index num_jobs) const {
    if (rankings.empty())
      throw std::invalid_argument("policy must cover at least one candidate");
    for (std::size_t c = 0; c < rankings.size(); ++c)
      if (!is_permutation_of_n(rankings[c], num_jobs))
        throw std::invalid_argument("ranking of candidate " +
                                    std::to_string(c) +
                                    " is not a permutation of the jobs");
  }
};

// One |J| x |J| doubly stochastic matrix per candidate; M_c(j, k) is the
// probability that job j is shown at position k+1.
template <typename Scalar>
struct StochasticPolicy {
  std::vector<MatrixX<Scalar>> matrices;

  Index num_candidates() const { return static_cast<Index>(matrices.size()); }

  void validate(Scalar tol = Scalar(1e-9)) const {
    if (matrices.empty())
      throw std::invalid_argument("policy must cover at least one candidate");
    const Index n = matrices.front().rows();
    for (std::size_t c = 0; c < matrices.size(); ++c) {
      const auto& m = matrices[c];
      if (m.rows() != n || m.cols() != n)
        throw std::invalid_argument("policy matrix of candidate " +
                                    std::to_string(c) + " is not " +
                                    std::to_string(n) + "x" +
                                    std::to_string(n));
      if (((m.array() < Scalar(0)) || (m.array() > Scalar(1))).any())
        throw std::invalid_argument("policy matrix entries must lie in [0,1]");
      for (Index i = 0; i < n; ++i) {
        if (std::abs(m.row(i).sum() - Scalar(1)) > tol)
          throw std::invalid_argument(
              "row " + std::to_string(i) + " of candidate " +
              std::to_string(c) + "'s matrix does not sum to 1");
        if (std::abs(m.col(i).sum() - Scalar(1)) > tol)
          throw std::invalid_argument(
              "column " + std::to_string(i) + " of candidate " +
              std::to_string(c) + "'s matrix does not sum to 1");
      }
    }
  }
};

}  // namespace matchmarket
