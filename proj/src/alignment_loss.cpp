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

#include "shapalign/alignment_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "shapalign/errors.hpp"
#include "shapalign/rng.hpp"

namespace shapalign {

namespace {

struct Roles {
  const std::vector<Vec>& players;
  const std::vector<Vec>& anchors;
};

Roles roles(const EmbeddingBatch& batch, Direction d) {
  switch (d) {
    case Direction::kContextToText: return {batch.contexts, batch.texts};
    case Direction::kTextToContext: return {batch.texts, batch.contexts};
    case Direction::kContextToImage: return {batch.contexts, batch.images};
    case Direction::kImageToContext: return {batch.images, batch.contexts};
  }
  fail(ErrorKind::kInvalidArgument, "unknown direction");
}

std::vector<Vec>& grad_slot(EmbeddingGrads& g, const EmbeddingBatch& batch,
                            const std::vector<Vec>& list) {
  if (&list == &batch.contexts) return g.contexts;
  if (&list == &batch.texts) return g.texts;
  return g.images;
}

GameConfig anchor_game(const Mat& sims, std::size_t anchor, double tau) {
  const auto row = sims.row(anchor);
  return GameConfig{std::vector<double>(row.begin(), row.end()), tau, 0.0};
}

double direction_weight(Direction d, double alpha, double beta) {
  const bool semantic =
      d == Direction::kContextToText || d == Direction::kTextToContext;
  return 0.5 * (semantic ? alpha : beta);
}

void validate_list(const std::vector<Vec>& list, std::size_t dim,
                   const char* name) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = std::string(name) + "[" + std::to_string(i) + "]";
    require(list[i].dim() == dim, ErrorKind::kDimMismatch,
            where + " has dimension " + std::to_string(list[i].dim()) +
                ", expected " + std::to_string(dim));
    require(all_finite(list[i]), ErrorKind::kInvalidArgument,
            where + " has non-finite entries");
    require(norm(list[i]) > kMinNorm, ErrorKind::kZeroNorm,
            where + " has norm <= 1e-12");
  }
}

}  // namespace

void EmbeddingBatch::validate() const {
  const std::size_t k = contexts.size();
  require(k >= 1, ErrorKind::kInvalidArgument, "batch must hold >= 1 triple");
  require(texts.size() == k && images.size() == k, ErrorKind::kDimMismatch,
          "contexts/texts/images must have equal length");
  require(ids.empty() || ids.size() == k, ErrorKind::kDimMismatch,
          "ids must be empty or have one entry per triple");
  const std::size_t d = contexts.front().dim();
  require(d >= 1, ErrorKind::kDimMismatch, "embedding dimension must be >= 1");
  validate_list(contexts, d, "contexts");
  validate_list(texts, d, "texts");
  validate_list(images, d, "images");
  if (!ids.empty()) {
    std::unordered_set<std::uint64_t> seen(ids.begin(), ids.end());
    require(seen.size() == ids.size(), ErrorKind::kInvalidArgument,
            "batch ids must be unique");
  }
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kContextToText: return "c2t";
    case Direction::kTextToContext: return "t2c";
    case Direction::kContextToImage: return "c2v";
    case Direction::kImageToContext: return "v2c";
  }
  return "unknown";
}

std::int64_t AlignmentOptions::stride_for(std::size_t k) const {
  if (stride != 0) return stride;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(k / 2));
}

Mat sim_matrix(std::span<const Vec> players, std::span<const Vec> anchors) {
  require(players.size() == anchors.size(), ErrorKind::kDimMismatch,
          "sim_matrix needs equally many players and anchors");
  const std::size_t k = players.size();
  Mat out(k, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < k; ++i) out(j, i) = cosine_sim(anchors[j], players[i]);
  return out;
}

std::uint64_t anchor_seed(std::uint64_t master, std::uint64_t anchor_id,
                          Direction direction) {
  return derive_seed(master, {anchor_id, static_cast<std::uint64_t>(direction)});
}

CyclicSchedule anchor_schedule(const EmbeddingBatch& batch, std::size_t anchor,
                               Direction direction, const AlignmentOptions& opts) {
  const std::size_t k = batch.size();
  std::vector<std::size_t> base(k);
  std::iota(base.begin(), base.end(), std::size_t{0});
  std::stable_sort(base.begin(), base.end(), [&](std::size_t a, std::size_t b) {
    return batch.id(a) < batch.id(b);
  });
  auto start = seeded_permutation(
      std::move(base), anchor_seed(opts.seed, batch.id(anchor), direction));
  return make_cyclic_schedule(std::move(start), opts.stride_for(k));
}

double directional_loss(const EmbeddingBatch& batch, Direction direction,
                        const AlignmentOptions& opts) {
  batch.validate();
  const auto [players, anchors] = roles(batch, direction);
  const Mat sims = sim_matrix(players, anchors);
  const std::size_t k = batch.size();

  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const GameConfig game = anchor_game(sims, j, opts.tau);
    const ShapleyReport report =
        shapley_cyclic(game, anchor_schedule(batch, j, direction, opts));
    double negatives = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      if (i != j) negatives += report.values[i];
    sum += report.values[j] - negatives;
  }
  return -sum / static_cast<double>(k);
}

double loss_c2t(const EmbeddingBatch& batch, const AlignmentOptions& opts) {
  return directional_loss(batch, Direction::kContextToText, opts);
}
double loss_t2c(const EmbeddingBatch& batch, const AlignmentOptions& opts) {
  return directional_loss(batch, Direction::kTextToContext, opts);
}
double loss_c2v(const EmbeddingBatch& batch, const AlignmentOptions& opts) {
  return directional_loss(batch, Direction::kContextToImage, opts);
}
double loss_v2c(const EmbeddingBatch& batch, const AlignmentOptions& opts) {
  return directional_loss(batch, Direction::kImageToContext, opts);
}

double semantic_loss(const EmbeddingBatch& batch, const AlignmentOptions& opts) {
  return 0.5 * (loss_c2t(batch, opts) + loss_t2c(batch, opts));
}

double modality_loss(const EmbeddingBatch& batch, const AlignmentOptions& opts) {
  return 0.5 * (loss_c2v(batch, opts) + loss_v2c(batch, opts));
}

double total_loss(double semantic, double modality, double main, double alpha,
                  double beta) {
  require(alpha >= 0.0 && beta >= 0.0, ErrorKind::kNegativeWeight,
          "alpha and beta must be non-negative");
  return alpha * semantic + beta * modality + main;
}

LossBreakdown alignment_losses(const EmbeddingBatch& batch,
                               const AlignmentOptions& opts, double alpha,
                               double beta, double main) {
  LossBreakdown out;
  out.alpha = alpha;
  out.beta = beta;
  out.main = main;
  out.c2t = loss_c2t(batch, opts);
  out.t2c = loss_t2c(batch, opts);
  out.c2v = loss_c2v(batch, opts);
  out.v2c = loss_v2c(batch, opts);
  out.semantic = 0.5 * (out.c2t + out.t2c);
  out.modality = 0.5 * (out.c2v + out.v2c);
  out.total = total_loss(out.semantic, out.modality, main, alpha, beta);
  return out;
}

EmbeddingGrads loss_gradients(const EmbeddingBatch& batch,
                              const AlignmentOptions& opts, double alpha,
                              double beta) {
  batch.validate();
  require(alpha >= 0.0 && beta >= 0.0, ErrorKind::kNegativeWeight,
          "alpha and beta must be non-negative");
  const std::size_t k = batch.size();
  const std::size_t d = batch.contexts.front().dim();

  EmbeddingGrads grads;
  grads.contexts.assign(k, Vec(d));
  grads.texts.assign(k, Vec(d));
  grads.images.assign(k, Vec(d));

  for (Direction direction : kAllDirections) {
    const double scale = direction_weight(direction, alpha, beta);
    if (scale == 0.0) continue;
    const auto [players, anchors] = roles(batch, direction);
    auto& player_grads = grad_slot(grads, batch, players);
    auto& anchor_grads = grad_slot(grads, batch, anchors);
    const Mat sims = sim_matrix(players, anchors);

    // d(loss)/d(phi_i(u_j)) = -(1/k) for i == j, +(1/k) otherwise.
    std::vector<double> weights(k);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i)
        weights[i] = scale * (i == j ? -1.0 : 1.0) / static_cast<double>(k);
      const GameConfig game = anchor_game(sims, j, opts.tau);
      const auto dsims = shapley_cyclic_backward(
          game, anchor_schedule(batch, j, direction, opts), weights);
      for (std::size_t i = 0; i < k; ++i) {
        cosine_sim_backward(anchors[j], players[i], dsims[i],
                            anchor_grads[j].span(), player_grads[i].span());
      }
    }
  }
  return grads;
}

}  // namespace shapalign
