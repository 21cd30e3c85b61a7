#pragma once

#include <cstdint>
#include <random>

namespace distreg {

using Rng = std::mt19937_64;

/// splitmix64 step, used to derive independent seeds for worker streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

inline double draw_uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double draw_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

/// Gamma(shape, rate) draw.
inline double draw_gamma(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

/// Inverse gamma draw with density b^a x^{-a-1} e^{-b/x} / Gamma(a).
inline double draw_inverse_gamma(Rng& rng, double shape, double scale) {
  return 1.0 / draw_gamma(rng, shape, scale);
}

}  // namespace distreg
