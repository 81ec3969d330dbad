#pragma once

// Dot-product reformulation of the equilibrium ranking: when the preference
// scores factor through feature maps (<phi1(c), psi1(j)> = p_cj and
// <phi2(c), psi2(j)> = p_jc), appending the outside-option terms yields
// vectors whose inner product is 2 beta log mu(c,j), so equilibrium ranking
// reduces to maximum-inner-product search.

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

#include "matchmarket/core.hpp"
#include "matchmarket/tu.hpp"

namespace matchmarket {

template <typename Scalar>
struct EmbeddingSet {
  MatrixX<Scalar> candidate_vectors;  // |C| x dim
  MatrixX<Scalar> job_vectors;        // |J| x dim

  Index dim() const { return candidate_vectors.cols(); }
};

// Exact feature maps that always exist: phi1 = p_cj rows against the identity
// on jobs, and the identity on candidates against psi2 = p_jc columns. Useful
// when no learned factorization is available.
template <typename Scalar>
struct FeatureMaps {
  MatrixX<Scalar> phi1, phi2;  // |C| x d1, |C| x d2
  MatrixX<Scalar> psi1, psi2;  // |J| x d1, |J| x d2
};

template <typename Scalar>
FeatureMaps<Scalar> identity_feature_maps(const PreferenceMatrices<Scalar>& prefs) {
  FeatureMaps<Scalar> f;
  f.phi1 = prefs.p_cj;
  f.psi1 = MatrixX<Scalar>::Identity(prefs.num_jobs(), prefs.num_jobs());
  f.phi2 = MatrixX<Scalar>::Identity(prefs.num_candidates(), prefs.num_candidates());
  f.psi2 = prefs.p_jc;  // row j holds employer j's scores over candidates
  return f;
}

// Candidate vector [phi1(c), phi2(c), beta log mu_c0, 1]; job vector
// [psi1(j), psi2(j), 1, beta log mu_0j]. The order-preserving constant factor
// 1/(2 beta) is dropped. If prefs are supplied, the feature maps are spot
// checked against them on a deterministic sample and a warning is emitted on
// mismatch (the caller owns the factorization's quality).
template <typename Scalar>
EmbeddingSet<Scalar> build_embeddings(const MatrixX<Scalar>& phi1,
                                      const MatrixX<Scalar>& phi2,
                                      const MatrixX<Scalar>& psi1,
                                      const MatrixX<Scalar>& psi2,
                                      const EquilibriumMatching<Scalar>& eq,
                                      const PreferenceMatrices<Scalar>* prefs = nullptr) {
  const Index C = eq.mu.rows();
  const Index J = eq.mu.cols();
  if (phi1.rows() != C || phi2.rows() != C)
    throw std::invalid_argument("candidate feature maps must have |C| rows");
  if (psi1.rows() != J || psi2.rows() != J)
    throw std::invalid_argument("job feature maps must have |J| rows");
  if (phi1.cols() != psi1.cols() || phi2.cols() != psi2.cols())
    throw std::invalid_argument(
        "feature dimensions disagree between the two sides");

  if (prefs != nullptr) {
    Scalar worst = Scalar(0);
    for (Index t = 0; t < 16; ++t) {
      const Index c = (t * 7919) % C;
      const Index j = (t * 104729) % J;
      worst = std::max(worst, std::abs(phi1.row(c).dot(psi1.row(j)) -
                                       prefs->p_cj(c, j)));
      worst = std::max(worst, std::abs(phi2.row(c).dot(psi2.row(j)) -
                                       prefs->p_jc(j, c)));
    }
    if (worst > Scalar(1e-6))
      std::cerr << "warning: feature maps reproduce the preference scores "
                   "only to "
                << static_cast<double>(worst)
                << "; embedding rankings may drift from the equilibrium\n";
  }

  EmbeddingSet<Scalar> emb;
  const Index d1 = phi1.cols(), d2 = phi2.cols();
  emb.candidate_vectors.resize(C, d1 + d2 + 2);
  emb.job_vectors.resize(J, d1 + d2 + 2);
  for (Index c = 0; c < C; ++c) {
    emb.candidate_vectors.block(c, 0, 1, d1) = phi1.row(c);
    emb.candidate_vectors.block(c, d1, 1, d2) = phi2.row(c);
    emb.candidate_vectors(c, d1 + d2) = eq.beta * std::log(eq.mu_c0(c));
    emb.candidate_vectors(c, d1 + d2 + 1) = Scalar(1);
  }
  for (Index j = 0; j < J; ++j) {
    emb.job_vectors.block(j, 0, 1, d1) = psi1.row(j);
    emb.job_vectors.block(j, d1, 1, d2) = psi2.row(j);
    emb.job_vectors(j, d1 + d2) = Scalar(1);
    emb.job_vectors(j, d1 + d2 + 1) = eq.beta * std::log(eq.mu_0j(j));
  }
  return emb;
}

// Exact maximum-inner-product scan: the k jobs with the largest dot products
// against the candidate's vector, descending, ties by ascending index.
template <typename Scalar>
Ranking top_k_by_dot(const EmbeddingSet<Scalar>& emb, Index candidate,
                     Index k) {
  const Index J = emb.job_vectors.rows();
  if (candidate < 0 || candidate >= emb.candidate_vectors.rows())
    throw std::invalid_argument("candidate index out of range");
  if (k < 1 || k > J)
    throw std::invalid_argument("k must lie in [1, number of jobs]");
  VectorX<Scalar> scores =
      emb.job_vectors * emb.candidate_vectors.row(candidate).transpose();
  Ranking full = ranking_from_scores(scores);
  full.resize(static_cast<std::size_t>(k));
  return full;
}

}  // namespace matchmarket
