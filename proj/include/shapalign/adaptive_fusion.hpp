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

// Gated cross-attention between image regions (queries) and text tokens
// (keys/values), steered by a bridging vector computed from context tokens.
//
//   Q = Hv Wq^T + bq      K = Ht Wk^T + bk      V = Ht Wv^T + bv
//   C = Hc Wc^T + bc      B = colmean(C^T C / sqrt(D))            (length D)
//   gq = tanh([Q | B] Wg1^T + bg1)   gk = tanh([K | B] Wg2^T + bg2)
//   Q' = gq * Q + (1 - gq) * B       K' = gk * K + (1 - gk) * B
//   M  = softmax_rows(Q' K'^T / sqrt(D)) V                       (n_v x D)
//
// Attention is single-head. The output has one row per query, i.e. per image
// region; a text-length output would require a transpose that is not part
// of the attention definition.

#include <array>
#include <cstddef>

#include "shapalign/rng.hpp"
#include "shapalign/tensor.hpp"

namespace shapalign {

struct FusionParams {
  Linear query;       // d_img -> D
  Linear key;         // d     -> D
  Linear value;       // d     -> D
  Linear context;     // d     -> D
  Linear query_gate;  // 2D    -> D
  Linear key_gate;    // 2D    -> D

  std::size_t width() const noexcept { return query.out_dim(); }
  void validate(std::size_t text_dim, std::size_t image_dim) const;

  static FusionParams zeros(std::size_t text_dim, std::size_t image_dim,
                            std::size_t width);
  // Entries uniform in [-scale, scale].
  static FusionParams random(std::size_t text_dim, std::size_t image_dim,
                             std::size_t width, SplitMix64& rng,
                             double scale = 0.5);

  // Parameters in a fixed order, for optimizers and gradient checks.
  std::array<Linear*, 6> layers() {
    return {&query, &key, &value, &context, &query_gate, &key_gate};
  }
  std::array<const Linear*, 6> layers() const {
    return {&query, &key, &value, &context, &query_gate, &key_gate};
  }
};

struct FusionInput {
  Mat text;     // n_t x d
  Mat context;  // n_c x d
  Mat image;    // n_v x d_img
};

struct Projections {
  Mat queries;  // n_v x D
  Mat keys;     // n_t x D
  Mat values;   // n_t x D
  Mat context;  // n_c x D
};

struct Gates {
  Mat query;  // n_v x D
  Mat key;    // n_t x D
};

struct MixedQueryKey {
  Mat queries;
  Mat keys;
};

Projections project(const FusionInput& input, const FusionParams& params);

Vec bridging_term(const Mat& context);

Gates gates(const Mat& queries, const Mat& keys, const Vec& bridge,
            const FusionParams& params);

MixedQueryKey gated_mix(const Mat& queries, const Mat& keys, const Vec& bridge,
                        const Gates& g);

// softmax_rows(Q K^T / sqrt(D)) V
Mat attention_weights(const Mat& queries, const Mat& keys);
Mat cross_attention(const Mat& queries, const Mat& keys, const Mat& values);

Mat fusion_forward(const FusionInput& input, const FusionParams& params);

// Vector-Jacobian product: gradient of sum(grad_output * fusion_forward(...))
// with respect to every parameter, returned in FusionParams layout.
FusionParams fusion_backward(const FusionInput& input, const FusionParams& params,
                             const Mat& grad_output);

}  // namespace shapalign
