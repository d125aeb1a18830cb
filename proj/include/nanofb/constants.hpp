// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numbers>

namespace nanofb::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double flux_quantum = 2.067833848e-15;  // Wb
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double k_boltzmann = 1.380649e-23;      // J/K

}  // namespace nanofb::constants
