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

#include "shapalign/harness/infonce.hpp"

#include <cmath>

#include "shapalign/errors.hpp"

namespace shapalign::harness {

namespace {

struct Sides {
  const std::vector<Vec>* players;
  const std::vector<Vec>* anchors;
  std::vector<Vec>* player_grads;
  std::vector<Vec>* anchor_grads;
};

Sides sides(const EmbeddingBatch& b, EmbeddingGrads* g, Direction d) {
  switch (d) {
    case Direction::kContextToText:
      return {&b.contexts, &b.texts, g ? &g->contexts : nullptr, g ? &g->texts : nullptr};
    case Direction::kTextToContext:
      return {&b.texts, &b.contexts, g ? &g->texts : nullptr, g ? &g->contexts : nullptr};
    case Direction::kContextToImage:
      return {&b.contexts, &b.images, g ? &g->contexts : nullptr, g ? &g->images : nullptr};
    case Direction::kImageToContext:
      return {&b.images, &b.contexts, g ? &g->images : nullptr, g ? &g->contexts : nullptr};
  }
  fail(ErrorKind::kInvalidArgument, "unknown direction");
}

}  // namespace

double infonce_directional(const EmbeddingBatch& batch, Direction direction,
                           double tau) {
  batch.validate();
  const Sides s = sides(batch, nullptr, direction);
  const Mat sims = sim_matrix(*s.players, *s.anchors);
  const std::size_t k = batch.size();
  double loss = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const Vec p = softmax_temp(sims.row(j), tau);
    loss -= std::log(p[j]);
  }
  return loss / static_cast<double>(k);
}

LossBreakdown infonce_losses(const EmbeddingBatch& batch, double tau,
                             double alpha, double beta) {
  LossBreakdown out;
  out.alpha = alpha;
  out.beta = beta;
  out.c2t = infonce_directional(batch, Direction::kContextToText, tau);
  out.t2c = infonce_directional(batch, Direction::kTextToContext, tau);
  out.c2v = infonce_directional(batch, Direction::kContextToImage, tau);
  out.v2c = infonce_directional(batch, Direction::kImageToContext, tau);
  out.semantic = 0.5 * (out.c2t + out.t2c);
  out.modality = 0.5 * (out.c2v + out.v2c);
  out.total = total_loss(out.semantic, out.modality, 0.0, alpha, beta);
  return out;
}

EmbeddingGrads infonce_gradients(const EmbeddingBatch& batch, double tau,
                                 double alpha, double beta) {
  batch.validate();
  require(alpha >= 0.0 && beta >= 0.0, ErrorKind::kNegativeWeight,
          "alpha and beta must be non-negative");
  const std::size_t k = batch.size();
  const std::size_t d = batch.contexts.front().dim();
  EmbeddingGrads g;
  g.contexts.assign(k, Vec(d));
  g.texts.assign(k, Vec(d));
  g.images.assign(k, Vec(d));

  for (Direction direction : kAllDirections) {
    const bool semantic = direction == Direction::kContextToText ||
                          direction == Direction::kTextToContext;
    const double scale = 0.5 * (semantic ? alpha : beta);
    if (scale == 0.0) continue;
    const Sides s = sides(batch, &g, direction);
    const Mat sims = sim_matrix(*s.players, *s.anchors);
    for (std::size_t j = 0; j < k; ++j) {
      const Vec p = softmax_temp(sims.row(j), tau);
      for (std::size_t i = 0; i < k; ++i) {
        const double dsim =
            scale * (p[i] - (i == j ? 1.0 : 0.0)) / (tau * static_cast<double>(k));
        cosine_sim_backward((*s.anchors)[j], (*s.players)[i], dsim,
                            (*s.anchor_grads)[j].span(), (*s.player_grads)[i].span());
      }
    }
  }
  return g;
}

}  // namespace shapalign::harness
