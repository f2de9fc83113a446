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

#include "shapalign/harness/synth.hpp"

#include <cmath>

#include "shapalign/errors.hpp"
#include "shapalign/rng.hpp"

namespace shapalign::harness {

void SynthConfig::validate() const {
  require(k >= 1, ErrorKind::kInvalidArgument, "k must be >= 1");
  require(d >= 2, ErrorKind::kInvalidArgument, "d must be >= 2");
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma),
          ErrorKind::kInvalidArgument, "noise_sigma must be >= 0");
}

EmbeddingBatch synth_batch(const SynthConfig& cfg) {
  cfg.validate();
  SplitMix64 rng(cfg.seed);
  EmbeddingBatch batch;
  batch.contexts.reserve(cfg.k);
  for (std::size_t i = 0; i < cfg.k; ++i) {
    Vec v(cfg.d);
    for (double& x : v) x = rng.normal();
    batch.contexts.push_back(normalized(v));
  }
  const auto noisy_copies = [&](std::vector<Vec>& out) {
    out.reserve(cfg.k);
    for (std::size_t i = 0; i < cfg.k; ++i) {
      Vec v(cfg.d);
      for (std::size_t c = 0; c < cfg.d; ++c)
        v[c] = batch.contexts[i][c] + cfg.noise_sigma * rng.normal();
      out.push_back(normalized(v));
    }
  };
  noisy_copies(batch.texts);
  noisy_copies(batch.images);
  return batch;
}

double retrieval_top1(const EmbeddingBatch& batch) {
  const std::size_t k = batch.size();
  const Mat sims = sim_matrix(batch.texts, batch.contexts);  // (context, text)
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (sims(i, j) > sims(i, best)) best = j;
    hits += best == i ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double mean_diagonal_similarity(const EmbeddingBatch& batch) {
  double s = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    s += cosine_sim(batch.contexts[i], batch.texts[i]);
  return s / static_cast<double>(batch.size());
}

}  // namespace shapalign::harness
