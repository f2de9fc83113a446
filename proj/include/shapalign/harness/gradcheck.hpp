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

// Central finite-difference checks of the analytic gradients on random
// instances. Used by the CLI and by the test suites.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace shapalign::harness {

// Two-point central difference (f(x+h) - f(x-h)) / 2h.
inline constexpr double kFiniteDifferenceStep = 1e-5;
// Five-point central stencil
// (8 (f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h, truncation O(h^4).
// At h = 1e-5 the two-point rule carries ~1e-11 of rounding noise, which
// swamps the relative error of gradient components below ~1e-6.
inline constexpr double kFivePointStep = 1e-3;

struct GradCheckResult {
  std::string target;  // "alignment", "fusion" or "crf"
  std::size_t instances = 0;
  std::size_t entries = 0;  // gradient components compared
  double max_rel_err = 0.0;  // against the five-point stencil
  double max_abs_err = 0.0;
  double max_rel_err_two_point = 0.0;  // against the h = 1e-5 two-point rule
};

// |a - f| / max(|a|, |f|, 1e-6)
double relative_error(double analytic, double numeric);

// alpha * semantic + beta * modality with frozen starting permutations;
// k in {2, 4}, d = 8, alpha and beta in [0.1, 1].
GradCheckResult gradcheck_alignment(std::uint64_t seed, std::size_t instances,
                                    double tau = 1.0);

// sum(G * fusion_forward(...)) for a random G, all parameter entries;
// sequence lengths in [1, 4], width in [2, 8].
GradCheckResult gradcheck_fusion(std::uint64_t seed, std::size_t instances);

// crf_nll with n in [1, 5], L in [2, 4], all potentials.
GradCheckResult gradcheck_crf(std::uint64_t seed, std::size_t instances);

// target,instances,entries,max_rel_err,max_abs_err,max_rel_err_two_point
std::string gradcheck_csv(const std::vector<GradCheckResult>& results);

}  // namespace shapalign::harness
