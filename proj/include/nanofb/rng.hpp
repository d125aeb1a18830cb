// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "nanofb/constants.hpp"

namespace nanofb {

/// Standard normal deviates by Box-Muller on a 64-bit Mersenne Twister.
/// Implemented here rather than via std::normal_distribution so that
/// streams are identical across standard library implementations.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  static GaussianStream substream(std::uint64_t seed, std::uint64_t index) { return GaussianStream(seed ^ index); }

  double uniform_open() {
    // (0, 1], 53 random bits
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    const double theta = constants::two_pi * uniform_open();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Wiener increment with variance dt.
  double wiener(double dt) { return std::sqrt(dt) * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nanofb
