// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace tkgd {

// Portable draws over mt19937_64; std distributions differ between
// standard libraries and would break cross-host reproducibility.

/// Uniform integer in [0, n).
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

/// Uniform double in [0, 1).
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

inline bool coin(std::mt19937_64& rng) { return (rng() >> 63) != 0; }

}  // namespace tkgd
