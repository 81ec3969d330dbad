#pragma once

// Birkhoff-von-Neumann decomposition of a doubly stochastic matrix M into a
// convex combination of permutation matrices, and weighted sampling of
// rankings from a decomposition.
//
// Matrix orientation matches StochasticPolicy: M(j, k) is the probability of
// job j at position k, and a term's permutation is stored as a Ranking
// (permutation[k] = job at position k).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "matchmarket/core.hpp"
#include "matchmarket/rng.hpp"

namespace matchmarket {

template <typename Scalar>
struct BvnTerm {
  Scalar weight;
  Ranking permutation;  // permutation[k] = job shown at position k
};

template <typename Scalar>
struct BvnDecomposition {
  std::vector<BvnTerm<Scalar>> terms;

  MatrixX<Scalar> reconstruct(Index n) const {
    MatrixX<Scalar> m = MatrixX<Scalar>::Zero(n, n);
    for (const auto& term : terms)
      for (Index k = 0; k < n; ++k) m(term.permutation[k], k) += term.weight;
    return m;
  }
};

// Greedy Birkhoff peeling: repeatedly find a perfect matching on the support
// {entries > eps}, subtract the minimum matched entry, stop once the remaining
// mass drops below eps, then renormalize the weights to sum to 1.
//
// The matching is maintained incrementally: subtracting a term only frees the
// positions whose matched entry fell out of the support, and only those are
// re-augmented (Kuhn's algorithm over the support), so a peel step costs about
// one augmenting path rather than a full matching.
//
// Termination bookkeeping: sub-eps crumbs (entries that leave the support
// without ever being the matched minimum, plus float rounding) are not
// extractable, so every row may legitimately strand up to n*eps of mass.
// "No matching left" with at most n*eps remaining therefore ends the peel
// cleanly; more remaining mass than that signals the input was not doubly
// stochastic.
template <typename Scalar>
BvnDecomposition<Scalar> bvn_decompose(const MatrixX<Scalar>& m,
                                       Scalar eps = Scalar(1e-12)) {
  const Index n = m.rows();
  if (n == 0 || m.cols() != n)
    throw std::invalid_argument("matrix must be square and non-empty");
  if (!(eps > Scalar(0)))
    throw std::invalid_argument("eps must be positive");
  const Scalar sum_tol = std::max(Scalar(1e-9), eps * static_cast<Scalar>(n));
  if ((m.array() < -eps).any())
    throw InfeasibleMatrixError("matrix has negative entries");
  for (Index i = 0; i < n; ++i) {
    if (std::abs(m.row(i).sum() - Scalar(1)) > sum_tol ||
        std::abs(m.col(i).sum() - Scalar(1)) > sum_tol)
      throw InfeasibleMatrixError(
          "matrix is not doubly stochastic (row/column sums deviate from 1)");
  }

  MatrixX<Scalar> r = m.cwiseMax(Scalar(0));
  // match_job[k] = job matched to position k; match_pos[j] = position of job j.
  std::vector<Index> match_job(static_cast<std::size_t>(n), -1);
  std::vector<Index> match_pos(static_cast<std::size_t>(n), -1);
  std::vector<char> visited(static_cast<std::size_t>(n));

  // Kuhn augmenting path from position k, scanning jobs in ascending order.
  auto augment = [&](auto&& self, Index k) -> bool {
    for (Index j = 0; j < n; ++j) {
      if (visited[static_cast<std::size_t>(j)] || !(r(j, k) > eps)) continue;
      visited[static_cast<std::size_t>(j)] = 1;
      if (match_pos[static_cast<std::size_t>(j)] < 0 ||
          self(self, match_pos[static_cast<std::size_t>(j)])) {
        match_pos[static_cast<std::size_t>(j)] = k;
        match_job[static_cast<std::size_t>(k)] = j;
        return true;
      }
    }
    return false;
  };
  auto rematch = [&](Index k) -> bool {
    std::fill(visited.begin(), visited.end(), char{0});
    return augment(augment, k);
  };

  BvnDecomposition<Scalar> decomp;
  Scalar remaining = Scalar(1);
  std::vector<Index> freed;
  freed.reserve(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) freed.push_back(k);

  while (remaining >= eps) {
    bool complete = true;
    for (Index k : freed) {
      if (match_job[static_cast<std::size_t>(k)] >= 0) continue;
      if (!rematch(k)) {
        complete = false;
        break;
      }
    }
    if (!complete) {
      if (remaining <= static_cast<Scalar>(n) * eps) break;  // crumbs only
      throw InfeasibleMatrixError(
          "no perfect matching on the support while mass remains; "
          "matrix was not doubly stochastic");
    }
    freed.clear();

    BvnTerm<Scalar> term;
    term.permutation.resize(static_cast<std::size_t>(n));
    Scalar theta = std::numeric_limits<Scalar>::infinity();
    for (Index k = 0; k < n; ++k) {
      const Index j = match_job[static_cast<std::size_t>(k)];
      term.permutation[static_cast<std::size_t>(k)] = j;
      theta = std::min(theta, r(j, k));
    }
    term.weight = theta;
    for (Index k = 0; k < n; ++k) {
      const Index j = match_job[static_cast<std::size_t>(k)];
      r(j, k) -= theta;
      if (!(r(j, k) > eps)) {
        // Entry left the support: free the pair for re-augmentation.
        match_job[static_cast<std::size_t>(k)] = -1;
        match_pos[static_cast<std::size_t>(j)] = -1;
        freed.push_back(k);
      }
    }
    decomp.terms.push_back(std::move(term));
    remaining -= theta;
  }

  if (decomp.terms.empty())
    throw InfeasibleMatrixError("nothing extractable: matrix carries no mass");
  Scalar total = Scalar(0);
  for (const auto& t : decomp.terms) total += t.weight;
  for (auto& t : decomp.terms) t.weight /= total;
  return decomp;
}

// Cumulative-weight sampler. Prefix sums are accumulated in term order, so a
// linear walk and this binary search select identical terms for the same
// uniform draw.
template <typename Scalar>
class BvnSampler {
 public:
  explicit BvnSampler(const BvnDecomposition<Scalar>& decomp)
      : decomp_(&decomp) {
    if (decomp.terms.empty())
      throw std::invalid_argument("cannot sample from an empty decomposition");
    cumulative_.reserve(decomp.terms.size());
    Scalar acc = Scalar(0);
    for (const auto& t : decomp.terms) {
      acc += t.weight;
      cumulative_.push_back(acc);
    }
  }

  const Ranking& sample(SplitMix64& rng) const {
    const Scalar u =
        uniform01<Scalar>(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;  // guard the u == total edge
    const auto idx =
        static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
    return decomp_->terms[idx].permutation;
  }

 private:
  const BvnDecomposition<Scalar>* decomp_;
  std::vector<Scalar> cumulative_;
};

// One weighted draw: a term chosen with probability proportional to its
// weight. Consumes exactly one generator value.
template <typename Scalar>
const Ranking& sample_ranking(const BvnDecomposition<Scalar>& decomp,
                              SplitMix64& rng) {
  if (decomp.terms.empty())
    throw std::invalid_argument("cannot sample from an empty decomposition");
  Scalar total = Scalar(0);
  for (const auto& t : decomp.terms) total += t.weight;
  const Scalar u = uniform01<Scalar>(rng) * total;
  Scalar acc = Scalar(0);
  for (const auto& t : decomp.terms) {
    acc += t.weight;
    if (u < acc) return t.permutation;
  }
  return decomp.terms.back().permutation;
}

}  // namespace matchmarket
