// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace nanofb {

/// Numeric values are shared with the C API status codes.
enum class ErrorCode : int {
  ok = 0,
  dimension = 1,
  shape = 2,
  regime = 3,
  detuning_sign = 4,
  blowup = 5,
  too_few_samples = 6,
  near_singular_gain = 7,
  out_of_validity = 8,
  config = 9,
  invalid_argument = 10,
  empty_input = 11,
  divergence = 12,
  io = 13,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nanofb
