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

// The similarity game: k players, each carrying its cosine similarity to a
// fixed anchor. A coalition's utility is the softmax(sims / tau)-weighted
// mean similarity of its members. Player indices are 0-based.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace shapalign {

// Cap for the subset enumeration (2^k utility table).
inline constexpr std::size_t kMaxExactSubsetPlayers = 20;
// Cap for the k! permutation enumeration.
inline constexpr std::size_t kMaxExactPermutationPlayers = 8;

struct GameConfig {
  std::vector<double> sims;  // sims[i] = sim(anchor, player i)
  double tau = 1.0;
  double empty_utility = 0.0;

  std::size_t players() const noexcept { return sims.size(); }
  // Throws on k == 0, tau <= 0, non-finite sims, or empty_utility != 0.
  void validate() const;
};

// An ordered set of distinct player indices.
class Coalition {
 public:
  Coalition() = default;
  Coalition(std::initializer_list<std::size_t> members) : members_(members) {}
  explicit Coalition(std::vector<std::size_t> members)
      : members_(std::move(members)) {}

  std::span<const std::size_t> members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }

  // Throws kInvalidCoalition on out-of-range or duplicate members.
  void validate(std::size_t players) const;

 private:
  std::vector<std::size_t> members_;
};

enum class ShapleyMethod { kExactSubset, kExactPermutation, kCyclic, kNaiveMc };

std::string_view to_string(ShapleyMethod method);

struct ShapleyReport {
  std::vector<double> values;
  ShapleyMethod method = ShapleyMethod::kExactSubset;
  std::size_t passes = 0;  // full permutation scans (0 for subset enumeration)
  std::uint64_t seed = 0;
  std::vector<std::size_t> stride_trace;
  // Number of non-empty coalition utilities evaluated.
  std::uint64_t utility_evaluations = 0;

  friend bool operator==(const ShapleyReport&, const ShapleyReport&) = default;
};

double utility(const GameConfig& cfg, const Coalition& coalition);

// Exact value by enumerating every subset of K \ {i} with binomial weights.
ShapleyReport shapley_exact_subsets(const GameConfig& cfg);

// Exact value as the average marginal over all k! orderings. Cross-check
// oracle for the subset form.
ShapleyReport shapley_exact_permutations(const GameConfig& cfg);

// One starting permutation plus the halving stride sequence it is scanned
// under. The i-th scan uses the start rotated left by the sum of the first
// i strides.
struct CyclicSchedule {
  std::vector<std::size_t> initial;
  std::vector<std::size_t> strides;  // s, s/2, ..., 1

  std::size_t passes() const noexcept { return strides.size(); }
  std::vector<std::vector<std::size_t>> orders() const;
};

// Throws kNonPositiveStride for initial_stride < 1 and kInvalidCoalition if
// `initial` is not a permutation of 0..k-1.
CyclicSchedule make_cyclic_schedule(std::vector<std::size_t> initial,
                                    std::int64_t initial_stride);

// Fisher-Yates permutation of `base` under SplitMix64(seed).
std::vector<std::size_t> seeded_permutation(std::vector<std::size_t> base,
                                            std::uint64_t seed);

// Cyclic approximation: a random permutation scanned once per stride in
// s, s/2, ..., 1, left-rotated by the current stride after each scan, each
// player's estimate being the running mean of its marginals.
ShapleyReport shapley_cyclic(const GameConfig& cfg, std::int64_t initial_stride,
                             std::uint64_t seed);
// Same estimator on an explicit schedule. The report's seed field is 0.
ShapleyReport shapley_cyclic(const GameConfig& cfg,
                             const CyclicSchedule& schedule);

// Gradient of sum_i weights[i] * value_i with respect to cfg.sims, with the
// schedule held fixed.
std::vector<double> shapley_cyclic_backward(const GameConfig& cfg,
                                            const CyclicSchedule& schedule,
                                            std::span<const double> weights);

struct NaiveMcOptions {
  std::size_t permutations = 1;
  std::uint64_t seed = 0;
  // Replace sampling by the full k! enumeration (requires k <= 8).
  bool enumerate = false;
};

// Baseline estimator: independent uniform permutations, marginals averaged.
ShapleyReport shapley_naive_mc(const GameConfig& cfg, const NaiveMcOptions& opts);

}  // namespace shapalign
