// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace phylogeo {

// Purpose tags keep the noise consumed by different parts of a training step
// in disjoint substreams, so adding a consumer never shifts another's draws.
enum class RngStream : uint64_t {
  kTipNoise = 1,
  kBranchNoise = 2,
  kTopologySample = 3,
  kMllImportance = 4,
  kInit = 5,
  kSimulate = 6,
};

// Counter-based generator: each (seed, step, sample, purpose) key seeds an
// independent splitmix64 sequence. Draw order within a substream is fixed,
// and substreams can be opened in any order or from any thread, which is
// what makes common-random-number comparisons and threaded sampling
// reproducible.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t step, uint64_t sample, RngStream purpose)
      : state_(Mix(Mix(Mix(Mix(0x243F6A8885A308D3ULL ^ seed) ^ step) ^ sample) ^
                   static_cast<uint64_t>(purpose))) {}

  uint64_t NextU64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1].
  double NextUnit() {
    return static_cast<double>((NextU64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the paired draw is cached.
  double NextGaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = NextUnit();
    const double u2 = NextUnit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  static uint64_t Mix(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace phylogeo
