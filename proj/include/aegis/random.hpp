#pragma once

#include <cstdint>
#include <random>

namespace aegis {

// std::uniform_*_distribution output is implementation-defined, which would
// let the standard library version change simulation results. These two
// helpers pin the mapping from raw engine output to values, so a seed alone
// reproduces a run anywhere.

inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  // Modulo bias is < n / 2^64, far below anything observable here.
  return static_cast<std::size_t>(rng() % n);
}

inline bool bernoulli(std::mt19937_64& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform_unit(rng) < p;
}

}  // namespace aegis
