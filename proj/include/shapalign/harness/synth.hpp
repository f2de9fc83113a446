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

#include "shapalign/alignment_loss.hpp"

namespace shapalign::harness {

struct SynthConfig {
  std::size_t k = 16;
  std::size_t d = 32;
  double noise_sigma = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

// k latent unit vectors become the contexts; text_i and image_i are
// normalize(latent_i + noise_sigma * N(0, I)). Draw order: all latents, then
// all texts, then all images, from one SplitMix64(seed) stream.
EmbeddingBatch synth_batch(const SynthConfig& cfg);

// Fraction of contexts whose most similar text (ties -> lowest index) is
// their own partner.
double retrieval_top1(const EmbeddingBatch& batch);

double mean_diagonal_similarity(const EmbeddingBatch& batch);

}  // namespace shapalign::harness
