/*
 * Copyright 2026 The Shapalign Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shapalign {

// Validation failures. Anything thrown as `Error` means the caller passed
// inputs that violate a documented precondition; the CLI maps these to exit
// code 2. Runtime problems (I/O, divergence) use std::runtime_error.
enum class ErrorKind {
  kZeroNorm,
  kDimMismatch,
  kNonPositiveTemperature,
  kInvalidCoalition,
  kTooManyPlayers,
  kNonPositiveStride,
  kNegativeWeight,
  kInvalidLabel,
  kNotADistribution,
  kInvalidArgument,
  kParseError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::invalid_argument {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::invalid_argument(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace shapalign
