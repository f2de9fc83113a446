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

// Shapley-valued contrastive losses over a batch of (context, text, image)
// triples.
//
// For a direction such as context->text, each text j is an anchor and the k
// contexts are players in a similarity game; the cyclic estimator gives
// phi_i(u_j) and the directional loss is
//
//   -(1/k) sum_j [ phi_j(u_j) - sum_{i != j} phi_i(u_j) ].
//
// The other directions swap roles (text->context) or replace texts by images.
// No normalisation by the number of negatives is applied, so magnitudes grow
// with k.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "shapalign/coalition_game.hpp"
#include "shapalign/tensor.hpp"

namespace shapalign {

struct EmbeddingBatch {
  std::vector<Vec> contexts;
  std::vector<Vec> texts;
  std::vector<Vec> images;
  // Stable identity per triple. Seeds and starting permutations follow ids,
  // not positions, so jointly reordering the batch (ids included) leaves every
  // loss unchanged. Empty means 0..k-1.
  std::vector<std::uint64_t> ids;

  std::size_t size() const noexcept { return contexts.size(); }
  std::uint64_t id(std::size_t i) const { return ids.empty() ? i : ids[i]; }

  // Equal list lengths, k >= 1, one shared dimension, finite entries,
  // norms > 1e-12, unique ids.
  void validate() const;

  friend bool operator==(const EmbeddingBatch&, const EmbeddingBatch&) = default;
};

enum class Direction : std::uint8_t {
  kContextToText = 0,
  kTextToContext = 1,
  kContextToImage = 2,
  kImageToContext = 3,
};

inline constexpr std::array<Direction, 4> kAllDirections = {
    Direction::kContextToText, Direction::kTextToContext,
    Direction::kContextToImage, Direction::kImageToContext};

std::string_view to_string(Direction d);

struct AlignmentOptions {
  double tau = 1.0;
  // Initial cyclic stride; 0 selects max(1, k / 2).
  std::int64_t stride = 0;
  std::uint64_t seed = 0;

  std::int64_t stride_for(std::size_t k) const;
};

struct LossBreakdown {
  double c2t = 0.0;
  double t2c = 0.0;
  double c2v = 0.0;
  double v2c = 0.0;
  double semantic = 0.0;
  double modality = 0.0;
  double main = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

// entry (j, i) = cosine_sim(anchors[j], players[i]).
Mat sim_matrix(std::span<const Vec> players, std::span<const Vec> anchors);

// Seed of the cyclic estimator for one anchor of one direction.
std::uint64_t anchor_seed(std::uint64_t master, std::uint64_t anchor_id,
                          Direction direction);

// Starting permutation for one anchor: the players in ascending-id order,
// Fisher-Yates shuffled under anchor_seed(...).
CyclicSchedule anchor_schedule(const EmbeddingBatch& batch, std::size_t anchor,
                               Direction direction, const AlignmentOptions& opts);

double directional_loss(const EmbeddingBatch& batch, Direction direction,
                        const AlignmentOptions& opts);

double loss_c2t(const EmbeddingBatch& batch, const AlignmentOptions& opts);
double loss_t2c(const EmbeddingBatch& batch, const AlignmentOptions& opts);
double loss_c2v(const EmbeddingBatch& batch, const AlignmentOptions& opts);
double loss_v2c(const EmbeddingBatch& batch, const AlignmentOptions& opts);

double semantic_loss(const EmbeddingBatch& batch, const AlignmentOptions& opts);
double modality_loss(const EmbeddingBatch& batch, const AlignmentOptions& opts);

// alpha * semantic + beta * modality + main. Throws kNegativeWeight.
double total_loss(double semantic, double modality, double main, double alpha,
                  double beta);

LossBreakdown alignment_losses(const EmbeddingBatch& batch,
                               const AlignmentOptions& opts, double alpha,
                               double beta, double main = 0.0);

struct EmbeddingGrads {
  std::vector<Vec> contexts;
  std::vector<Vec> texts;
  std::vector<Vec> images;
};

// Gradient of alpha * semantic + beta * modality with respect to every
// embedding. Starting permutations are treated as constants; gradients flow
// through the coalition utilities (softmax and cosine) only.
EmbeddingGrads loss_gradients(const EmbeddingBatch& batch,
                              const AlignmentOptions& opts, double alpha,
                              double beta);

}  // namespace shapalign
