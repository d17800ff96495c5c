// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace visynth {

/// SplitMix64. Used instead of the standard distributions so that draws are
/// identical across standard library implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::uint64_t state_;
};

/// Independent stream for (seed, index); neighbouring indices do not share state.
inline SplitMix64 keyed_stream(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 mix(seed ^ 0x5851f42d4c957f2dULL);
  const std::uint64_t a = mix.next();
  SplitMix64 inner(a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
  inner.next();
  return inner;
}

}  // namespace visynth
