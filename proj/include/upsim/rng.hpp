// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace upsim {

/// SplitMix64 stream. Every random draw in a simulation comes from one of
/// these, seeded from the scenario seed, so runs are reproducible down to
/// the byte on any platform (no <random> distribution variance).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 bits of entropy.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

  std::vector<std::uint8_t> next_bytes(std::size_t n) {
    std::vector<std::uint8_t> out(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 8 == 0) word = next();
      out[i] = static_cast<std::uint8_t>(word >> (8 * (i % 8)));
    }
    return out;
  }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream for a named sub-purpose of a seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
  SplitMix64 mix(seed ^ (0xA076'1D64'78BD'642Full * (purpose + 1)));
  return mix.next();
}

}  // namespace upsim
