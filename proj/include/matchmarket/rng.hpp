#pragma once

// Deterministic random streams. The generator and the seed-derivation chain
// are part of the reproducibility contract: every documented artifact (markets,
// simulation estimates, experiment CSVs) is a pure function of a 64-bit seed,
// bit-identical across platforms and thread counts. Do not change either
// silently.

#include <cstdint>
#include <initializer_list>

namespace matchmarket {

// splitmix64 finalizer (Steele, Lea & Flood 2014; also Vigna's splitmix64
// reference implementation): a bijective 64-bit hash used both as the
// generator's output function and as the seed-derivation mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-based generator: state advances by the golden-ratio Weyl increment,
// output is mix64 of the state. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t operator()() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

 private:
  std::uint64_t state_;
};

// Hash chain for hierarchical substreams: fold each path word into the running
// hash as h <- mix64(h ^ mix64(w + GOLDEN)). Order-sensitive, so
// derive_seed(s, {a, b}) != derive_seed(s, {b, a}), and extending a path never
// collides with the unextended stream in practice.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ull;
  std::uint64_t h = mix64(base + golden);
  for (std::uint64_t w : path) h = mix64(h ^ mix64(w + golden));
  return h;
}

// Uniform double in [0, 1) from the top 53 bits; the standard exact ladder
// (every value is a multiple of 2^-53), identical on every platform.
template <typename Scalar = double>
inline Scalar uniform01(SplitMix64& rng) {
  return static_cast<Scalar>((rng() >> 11) * 0x1.0p-53);
}

template <typename Scalar>
inline bool bernoulli(SplitMix64& rng, Scalar p) {
  return uniform01<Scalar>(rng) < p;
}

// Stable 64-bit key of a double (for seed paths involving real parameters).
inline std::uint64_t double_key(double x) {
  static_assert(sizeof(double) == sizeof(std::uint64_t));
  return __builtin_bit_cast(std::uint64_t, x);
}

}  // namespace matchmarket
