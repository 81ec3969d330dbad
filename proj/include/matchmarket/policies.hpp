#pragma once

// The two conventional baselines: rank by the candidate's own scores (naive)
// or by the product of both sides' scores (reciprocal; order-equivalent to the
// geometric mean).

#include "matchmarket/core.hpp"

namespace matchmarket {

template <typename Scalar>
DeterministicPolicy naive_policy(const PreferenceMatrices<Scalar>& prefs) {
  prefs.validate();
  DeterministicPolicy policy;
  policy.rankings.reserve(static_cast<std::size_t>(prefs.num_candidates()));
  for (Index c = 0; c < prefs.num_candidates(); ++c)
    policy.rankings.push_back(ranking_from_scores(prefs.p_cj.row(c)));
  return policy;
}

template <typename Scalar>
DeterministicPolicy reciprocal_policy(const PreferenceMatrices<Scalar>& prefs) {
  prefs.validate();
  DeterministicPolicy policy;
  policy.rankings.reserve(static_cast<std::size_t>(prefs.num_candidates()));
  for (Index c = 0; c < prefs.num_candidates(); ++c) {
    VectorX<Scalar> scores =
        prefs.p_cj.row(c).transpose().cwiseProduct(prefs.p_jc.col(c));
    policy.rankings.push_back(ranking_from_scores(scores));
  }
  return policy;
}

}  // namespace matchmarket
