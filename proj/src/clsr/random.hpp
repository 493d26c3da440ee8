#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace clsr {

using Rng = std::mt19937_64;

/// Independent stream for (seed, a, b, ...); used to give each raw series,
/// epoch or config its own generator so results do not depend on call order.
inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
  std::vector<std::uint32_t> material{static_cast<std::uint32_t>(seed),
                                      static_cast<std::uint32_t>(seed >> 32)};
  for (auto k : keys) {
    material.push_back(static_cast<std::uint32_t>(k));
    material.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq full(material.begin(), material.end());
  return Rng(full);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double normal(Rng& rng, double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(rng);
}

}  // namespace clsr
