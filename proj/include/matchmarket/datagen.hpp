#pragma once

// Synthetic preference generator: p_{c,j} = lambda * pbar_j + (1-lambda) *
// uniform noise, where pbar ranks one side by a linearly decaying popularity
// score. lambda interpolates from fully idiosyncratic tastes (0) to fully
// crowded markets where everyone agrees (1).

#include <cstdint>
#include <stdexcept>

#include "matchmarket/core.hpp"
#include "matchmarket/rng.hpp"

namespace matchmarket {

struct SyntheticConfig {
  Index n = 0;             // number of employers; candidates = 1.5n
  double lambda = 0.5;     // crowding in [0,1]
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 1) throw std::invalid_argument("market size n must be >= 1");
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("lambda must lie in [0,1]");
  }
};

// |C| = 1.5 n, rounded half up for odd n.
inline Index candidates_for(Index n) { return (3 * n + 1) / 2; }

template <typename Scalar = double>
PreferenceMatrices<Scalar> generate_market(const SyntheticConfig& config) {
  config.validate();
  const Index num_jobs = config.n;
  const Index num_cands = candidates_for(config.n);

  // Popularity of the k-th user (0-based): 1 - k/(count-1); a single user is
  // maximally popular by convention.
  auto popularity = [](Index k, Index count) {
    return count > 1
               ? Scalar(1) - Scalar(k) / static_cast<Scalar>(count - 1)
               : Scalar(1);
  };

  PreferenceMatrices<Scalar> prefs;
  prefs.p_cj.resize(num_cands, num_jobs);
  prefs.p_jc.resize(num_jobs, num_cands);

  const auto lam = static_cast<Scalar>(config.lambda);

  // Independent substreams for the two matrices; each filled row-major.
  SplitMix64 rng_cj(derive_seed(config.seed, {0}));
  for (Index c = 0; c < num_cands; ++c)
    for (Index j = 0; j < num_jobs; ++j)
      prefs.p_cj(c, j) = lam * popularity(j, num_jobs) +
                         (Scalar(1) - lam) * uniform01<Scalar>(rng_cj);

  SplitMix64 rng_jc(derive_seed(config.seed, {1}));
  for (Index j = 0; j < num_jobs; ++j)
    for (Index c = 0; c < num_cands; ++c)
      prefs.p_jc(j, c) = lam * popularity(c, num_cands) +
                         (Scalar(1) - lam) * uniform01<Scalar>(rng_jc);

  return prefs;
}

}  // namespace matchmarket
