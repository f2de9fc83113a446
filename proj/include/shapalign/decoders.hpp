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

// Prediction heads: a linear-chain CRF over token labels and a word-pair
// contrastive classifier over token pairs. Labels are 0-based.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "shapalign/tensor.hpp"

namespace shapalign {

// ---------------------------------------------------------------------------
// Linear-chain CRF
//
// score(y) = start[y_0] + sum_t emissions[t][y_t]
//          + sum_t transitions[y_{t-1}][y_t] + end[y_{n-1}]

struct CrfModel {
  Mat emissions;    // n x L
  Mat transitions;  // L x L, row = previous label
  Vec start;        // L
  Vec end;          // L

  std::size_t length() const noexcept { return emissions.rows(); }
  std::size_t labels() const noexcept { return emissions.cols(); }
  void validate() const;

  static CrfModel zeros(std::size_t n, std::size_t labels);
};

double crf_score(const CrfModel& model, std::span<const std::size_t> labels);

// log sum_y exp(score(y)) by the forward recursion.
double crf_log_partition(const CrfModel& model);

// -log P(gold). Throws kInvalidLabel for wrong length or out-of-range labels.
double crf_nll(const CrfModel& model, std::span<const std::size_t> gold);

struct CrfGradients {
  Mat emissions;
  Mat transitions;
  Vec start;
  Vec end;
};

// Gradient of crf_nll: expected potentials usage minus gold usage
// (forward-backward marginals).
CrfGradients crf_nll_gradients(const CrfModel& model,
                               std::span<const std::size_t> gold);

// Per-position label marginals P(y_t = l), n x L.
Mat crf_marginals(const CrfModel& model);

// Viterbi. Ties go to the lowest label index.
std::vector<std::size_t> crf_decode(const CrfModel& model);

// ---------------------------------------------------------------------------
// Word-pair contrastive head

// Stack of affine layers with tanh between consecutive layers (none after the
// last one).
struct Mlp {
  std::vector<Linear> layers;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
  Vec forward(std::span<const double> x) const;
  Mat forward_rows(const Mat& x) const;
};

enum class Channel { kText, kPartOfSpeech, kPosition };

std::string_view to_string(Channel channel);

struct WordPairHead {
  Mlp text_pair;          // 3 d_t -> d_2
  Mlp pos_pair;           // 3 d_1 -> d_2
  Mlp position_pair;      // 3 d_1 -> d_2
  Mlp text_classifier;    // d_2 -> L_pair
  Mlp joint_classifier;   // 3 d_2 -> L_pair
  double lambda = 1.0;    // refinement scale

  const Mlp& pair_mlp(Channel channel) const;
};

// Dense n0 x n1 x n2 array; (i, j) addresses a length-n2 fibre.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t n0, std::size_t n1, std::size_t n2, double fill = 0.0)
      : n0_(n0), n1_(n1), n2_(n2), data_(n0 * n1 * n2, fill) {}

  std::size_t dim0() const noexcept { return n0_; }
  std::size_t dim1() const noexcept { return n1_; }
  std::size_t dim2() const noexcept { return n2_; }

  std::span<double> at(std::size_t i, std::size_t j) {
    return {data_.data() + (i * n1_ + j) * n2_, n2_};
  }
  std::span<const double> at(std::size_t i, std::size_t j) const {
    return {data_.data() + (i * n1_ + j) * n2_, n2_};
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t c) {
    return data_[(i * n1_ + j) * n2_ + c];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t c) const {
    return data_[(i * n1_ + j) * n2_ + c];
  }

 private:
  std::size_t n0_ = 0, n1_ = 0, n2_ = 0;
  std::vector<double> data_;
};

// X[i][j] = MLP(concat(M_i, M_j, M_i - M_j)).
Tensor3 pair_features(const Mat& features, const WordPairHead& head,
                      Channel channel);

// Row-wise MLP over concat(M_t, M_s, M_p).
Mat channel_merge(const Mat& text, const Mat& pos, const Mat& position,
                  const Mlp& mlp);

// Lower clamp applied to probabilities before the log ratio.
inline constexpr double kProbabilityFloor = 1e-12;

// softmax(P_tsp + lambda * log(P_tsp / P_t)). The distributions themselves,
// not logits, enter the softmax. Throws kNotADistribution when an input has a
// negative entry or sums to 1 +/- more than 1e-6.
Vec refine_distribution(std::span<const double> text_only,
                        std::span<const double> enhanced, double lambda);

// Final n x n x L_pair distributions from the three channels.
Tensor3 wordpair_distributions(const WordPairHead& head, const Mat& text,
                               const Mat& pos, const Mat& position);

// -sum_{i,j} log final[i][j][gold[i*n + j]]. gold is row-major n x n.
double wordpair_loss(const Tensor3& final_dist,
                     std::span<const std::size_t> gold);

}  // namespace shapalign
