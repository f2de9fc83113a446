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

#include "shapalign/alignment_loss.hpp"

namespace shapalign::harness {

// Ablation comparator: symmetric InfoNCE on the same pairs and directions as
// the Shapley losses,
//   L_dir = -(1/k) sum_j log softmax_i(sim(anchor_j, player_i) / tau)[j].
double infonce_directional(const EmbeddingBatch& batch, Direction direction,
                           double tau);

LossBreakdown infonce_losses(const EmbeddingBatch& batch, double tau,
                             double alpha, double beta);

EmbeddingGrads infonce_gradients(const EmbeddingBatch& batch, double tau,
                                 double alpha, double beta);

}  // namespace shapalign::harness
