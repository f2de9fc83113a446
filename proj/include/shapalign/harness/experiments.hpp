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

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "shapalign/alignment_loss.hpp"
#include "shapalign/harness/report.hpp"
#include "shapalign/harness/synth.hpp"

namespace shapalign::harness {

// ---------------------------------------------------------------------------
// Estimator convergence

struct BenchConfig {
  std::vector<std::size_t> k_values = {1, 2, 3, 4, 5, 6, 7, 8};
  double tau = 1.0;
  std::size_t seeds = 2000;
  std::int64_t stride = 0;  // 0 -> max(1, k / 2)
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool record_timing = false;  // otherwise every seconds field is 0
};

// Random game per k with sims uniform in [-1, 1]; the game for k is drawn
// from SplitMix64(derive_seed(seed, {k})). Rows per k:
//   exact_subset        the reference, zero error
//   cyclic              per-seed estimates, budget = passes * k
//   naive_mc            per-seed estimates at the same budget
//   cyclic_seed_mean    error of the estimate averaged over all seeds
//   naive_mc_seed_mean  likewise for naive_mc
RunReport bench_convergence(const BenchConfig& cfg);

// Game drawn by bench_convergence for a given k.
GameConfig bench_game(std::uint64_t seed, std::size_t k, double tau);

// ---------------------------------------------------------------------------
// Toy alignment training

enum class LossKind { kShapley, kInfoNce };

struct TrainConfig {
  SynthConfig data;
  std::size_t steps = 300;
  double lr = 0.5;
  double alpha = 0.2;
  double beta = 0.4;
  LossKind loss = LossKind::kShapley;
  AlignmentOptions align;  // tau, stride and estimator seed
  // Draw fresh starting permutations every step instead of reusing one set
  // for the whole run.
  bool resample_permutations = false;
  bool record_timing = false;

  void validate() const;
};

// Gradient descent on the text and image embeddings (contexts frozen) under
// alpha * semantic + beta * modality. steps[s] holds the objective and the
// context -> text top-1 accuracy after s updates (s = 0..steps). A non-finite
// objective stops the run with diverged = true.
RunReport train_toy_alignment(const TrainConfig& cfg);

// Same, also returning the final embeddings.
RunReport train_toy_alignment(const TrainConfig& cfg, EmbeddingBatch& final_batch);

using WeightGrid = std::vector<std::pair<double, double>>;  // (alpha, beta)

// Cartesian product, alpha-major.
WeightGrid weight_grid(const std::vector<double>& alphas,
                       const std::vector<double>& betas);

// One train_toy_alignment per (alpha, beta) cell. Every cell starts from the
// same synthetic batch and estimator seeds as `base`, so a (0, 0) cell is the
// no-alignment baseline and a one-cell grid equals a single training run.
RunReport sweep_alpha_beta(const WeightGrid& grid, const TrainConfig& base,
                           unsigned threads = 1);

}  // namespace shapalign::harness
