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

#include "shapalign/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "shapalign/errors.hpp"

namespace shapalign {

namespace {

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void check_gold(const CrfModel& model, std::span<const std::size_t> gold) {
  require(gold.size() == model.length(), ErrorKind::kInvalidLabel,
          "gold sequence has length " + std::to_string(gold.size()) +
              ", expected " + std::to_string(model.length()));
  for (std::size_t t = 0; t < gold.size(); ++t) {
    require(gold[t] < model.labels(), ErrorKind::kInvalidLabel,
            "label " + std::to_string(gold[t]) + " at position " +
                std::to_string(t) + " outside [0, " +
                std::to_string(model.labels()) + ")");
  }
}

// alpha(t, l): log-sum of scores of all prefixes ending in label l at t,
// excluding the end potential.
Mat forward_table(const CrfModel& m) {
  const std::size_t n = m.length(), L = m.labels();
  Mat alpha(n, L);
  for (std::size_t l = 0; l < L; ++l) alpha(0, l) = m.start[l] + m.emissions(0, l);
  std::vector<double> terms(L);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t p = 0; p < L; ++p) terms[p] = alpha(t - 1, p) + m.transitions(p, l);
      alpha(t, l) = m.emissions(t, l) + log_sum_exp(terms);
    }
  }
  return alpha;
}

// beta(t, l): log-sum of scores of all suffixes after t given label l at t,
// including the end potential.
Mat backward_table(const CrfModel& m) {
  const std::size_t n = m.length(), L = m.labels();
  Mat beta(n, L);
  for (std::size_t l = 0; l < L; ++l) beta(n - 1, l) = m.end[l];
  std::vector<double> terms(L);
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t q = 0; q < L; ++q)
        terms[q] = m.transitions(l, q) + m.emissions(t + 1, q) + beta(t + 1, q);
      beta(t, l) = log_sum_exp(terms);
    }
  }
  return beta;
}

double partition_from(const CrfModel& m, const Mat& alpha) {
  const std::size_t L = m.labels();
  std::vector<double> terms(L);
  for (std::size_t l = 0; l < L; ++l) terms[l] = alpha(m.length() - 1, l) + m.end[l];
  return log_sum_exp(terms);
}

void check_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double x : p) {
    require(std::isfinite(x) && x >= 0.0, ErrorKind::kNotADistribution,
            std::string(name) + " has a negative or non-finite entry");
    sum += x;
  }
  require(std::abs(sum - 1.0) <= 1e-6, ErrorKind::kNotADistribution,
          std::string(name) + " sums to " + std::to_string(sum));
}

}  // namespace

void CrfModel::validate() const {
  const std::size_t L = labels();
  require(length() >= 1 && L >= 1, ErrorKind::kDimMismatch,
          "CRF needs n >= 1 and L >= 1");
  require(transitions.rows() == L && transitions.cols() == L &&
              start.dim() == L && end.dim() == L,
          ErrorKind::kDimMismatch, "CRF potentials disagree on label count");
  require(all_finite(emissions.flat()) && all_finite(transitions.flat()) &&
              all_finite(start) && all_finite(end),
          ErrorKind::kInvalidArgument, "CRF potentials must be finite");
}

CrfModel CrfModel::zeros(std::size_t n, std::size_t labels) {
  return CrfModel{Mat(n, labels), Mat(labels, labels), Vec(labels), Vec(labels)};
}

double crf_score(const CrfModel& model, std::span<const std::size_t> labels) {
  model.validate();
  check_gold(model, labels);
  double s = model.start[labels.front()] + model.end[labels.back()];
  for (std::size_t t = 0; t < labels.size(); ++t) {
    s += model.emissions(t, labels[t]);
    if (t > 0) s += model.transitions(labels[t - 1], labels[t]);
  }
  return s;
}

double crf_log_partition(const CrfModel& model) {
  model.validate();
  return partition_from(model, forward_table(model));
}

double crf_nll(const CrfModel& model, std::span<const std::size_t> gold) {
  const double score = crf_score(model, gold);
  return crf_log_partition(model) - score;
}

Mat crf_marginals(const CrfModel& model) {
  model.validate();
  const Mat alpha = forward_table(model);
  const Mat beta = backward_table(model);
  const double log_z = partition_from(model, alpha);
  Mat marg(model.length(), model.labels());
  for (std::size_t t = 0; t < model.length(); ++t)
    for (std::size_t l = 0; l < model.labels(); ++l)
      marg(t, l) = std::exp(alpha(t, l) + beta(t, l) - log_z);
  return marg;
}

CrfGradients crf_nll_gradients(const CrfModel& model,
                               std::span<const std::size_t> gold) {
  model.validate();
  check_gold(model, gold);
  const std::size_t n = model.length(), L = model.labels();
  const Mat alpha = forward_table(model);
  const Mat beta = backward_table(model);
  const double log_z = partition_from(model, alpha);

  CrfGradients g{Mat(n, L), Mat(L, L), Vec(L), Vec(L)};
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t l = 0; l < L; ++l)
      g.emissions(t, l) = std::exp(alpha(t, l) + beta(t, l) - log_z);
  for (std::size_t l = 0; l < L; ++l) {
    g.start[l] = g.emissions(0, l);
    g.end[l] = g.emissions(n - 1, l);
  }
  for (std::size_t t = 1; t < n; ++t)
    for (std::size_t p = 0; p < L; ++p)
      for (std::size_t q = 0; q < L; ++q)
        g.transitions(p, q) += std::exp(alpha(t - 1, p) + model.transitions(p, q) +
                                        model.emissions(t, q) + beta(t, q) - log_z);

  for (std::size_t t = 0; t < n; ++t) {
    g.emissions(t, gold[t]) -= 1.0;
    if (t > 0) g.transitions(gold[t - 1], gold[t]) -= 1.0;
  }
  g.start[gold.front()] -= 1.0;
  g.end[gold.back()] -= 1.0;
  return g;
}

std::vector<std::size_t> crf_decode(const CrfModel& model) {
  model.validate();
  const std::size_t n = model.length(), L = model.labels();
  std::vector<double> score(L), next(L);
  std::vector<std::size_t> back((n - 1) * L);
  for (std::size_t l = 0; l < L; ++l) score[l] = model.start[l] + model.emissions(0, l);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t l = 0; l < L; ++l) {
      std::size_t best_p = 0;
      double best = score[0] + model.transitions(0, l);
      for (std::size_t p = 1; p < L; ++p) {
        const double s = score[p] + model.transitions(p, l);
        if (s > best) {
          best = s;
          best_p = p;
        }
      }
      next[l] = best + model.emissions(t, l);
      back[(t - 1) * L + l] = best_p;
    }
    std::swap(score, next);
  }
  std::size_t last = 0;
  for (std::size_t l = 1; l < L; ++l)
    if (score[l] + model.end[l] > score[last] + model.end[last]) last = l;

  std::vector<std::size_t> path(n);
  path[n - 1] = last;
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[(t - 1) * L + path[t]];
  return path;
}

Vec Mlp::forward(std::span<const double> x) const {
  require(!layers.empty(), ErrorKind::kInvalidArgument, "MLP has no layers");
  Vec h(x);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].apply(h);
    if (i + 1 < layers.size())
      for (double& v : h) v = std::tanh(v);
  }
  return h;
}

Mat Mlp::forward_rows(const Mat& x) const {
  Mat out(x.rows(), out_dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Vec y = forward(x.row(r));
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::kText: return "t";
    case Channel::kPartOfSpeech: return "s";
    case Channel::kPosition: return "p";
  }
  return "unknown";
}

const Mlp& WordPairHead::pair_mlp(Channel channel) const {
  switch (channel) {
    case Channel::kText: return text_pair;
    case Channel::kPartOfSpeech: return pos_pair;
    case Channel::kPosition: return position_pair;
  }
  fail(ErrorKind::kInvalidArgument, "unknown channel");
}

Tensor3 pair_features(const Mat& features, const WordPairHead& head,
                      Channel channel) {
  const Mlp& mlp = head.pair_mlp(channel);
  const std::size_t n = features.rows(), d = features.cols();
  require(mlp.in_dim() == 3 * d, ErrorKind::kDimMismatch,
          std::string("pair MLP for channel ") + std::string(to_string(channel)) +
              " expects input width " + std::to_string(mlp.in_dim()) + ", got 3*" +
              std::to_string(d));
  Tensor3 out(n, n, mlp.out_dim());
  Vec x(3 * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t c = 0; c < d; ++c) {
        x[c] = features(i, c);
        x[d + c] = features(j, c);
        x[2 * d + c] = features(i, c) - features(j, c);
      }
      const Vec y = mlp.forward(x);
      std::copy(y.begin(), y.end(), out.at(i, j).begin());
    }
  }
  return out;
}

Mat channel_merge(const Mat& text, const Mat& pos, const Mat& position,
                  const Mlp& mlp) {
  require(text.rows() == pos.rows() && text.rows() == position.rows(),
          ErrorKind::kDimMismatch, "channels must have equal row counts");
  const std::size_t width = text.cols() + pos.cols() + position.cols();
  require(mlp.in_dim() == width, ErrorKind::kDimMismatch,
          "merge MLP input width " + std::to_string(mlp.in_dim()) +
              " != concatenated width " + std::to_string(width));
  Mat concat(text.rows(), width);
  for (std::size_t r = 0; r < text.rows(); ++r) {
    auto dst = concat.row(r).begin();
    for (const Mat* m : {&text, &pos, &position}) {
      const auto src = m->row(r);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return mlp.forward_rows(concat);
}

Vec refine_distribution(std::span<const double> text_only,
                        std::span<const double> enhanced, double lambda) {
  require(text_only.size() == enhanced.size() && !enhanced.empty(),
          ErrorKind::kDimMismatch, "distributions must have equal, non-zero length");
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::kInvalidArgument,
          "lambda must be >= 0");
  check_distribution(text_only, "P_t");
  check_distribution(enhanced, "P_tsp");
  Vec logits(enhanced.size());
  for (std::size_t c = 0; c < enhanced.size(); ++c) {
    const double pt = std::max(text_only[c], kProbabilityFloor);
    const double ptsp = std::max(enhanced[c], kProbabilityFloor);
    logits[c] = enhanced[c] + lambda * std::log(ptsp / pt);
  }
  return softmax_temp(logits, 1.0);
}

Tensor3 wordpair_distributions(const WordPairHead& head, const Mat& text,
                               const Mat& pos, const Mat& position) {
  require(text.rows() == pos.rows() && text.rows() == position.rows(),
          ErrorKind::kDimMismatch, "channels must have equal row counts");
  const Tensor3 xt = pair_features(text, head, Channel::kText);
  const Tensor3 xs = pair_features(pos, head, Channel::kPartOfSpeech);
  const Tensor3 xp = pair_features(position, head, Channel::kPosition);
  const std::size_t n = text.rows(), d2 = xt.dim2();
  require(xs.dim2() == d2 && xp.dim2() == d2, ErrorKind::kDimMismatch,
          "pair MLPs must share the output width");

  Tensor3 out(n, n, head.joint_classifier.out_dim());
  Vec joint(3 * d2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Vec p_text = softmax_temp(head.text_classifier.forward(xt.at(i, j)), 1.0);
      std::copy(xt.at(i, j).begin(), xt.at(i, j).end(), joint.begin());
      std::copy(xs.at(i, j).begin(), xs.at(i, j).end(), joint.begin() + static_cast<std::ptrdiff_t>(d2));
      std::copy(xp.at(i, j).begin(), xp.at(i, j).end(), joint.begin() + static_cast<std::ptrdiff_t>(2 * d2));
      const Vec p_joint = softmax_temp(head.joint_classifier.forward(joint), 1.0);
      const Vec refined = refine_distribution(p_text, p_joint, head.lambda);
      std::copy(refined.begin(), refined.end(), out.at(i, j).begin());
    }
  }
  return out;
}

double wordpair_loss(const Tensor3& final_dist, std::span<const std::size_t> gold) {
  const std::size_t n = final_dist.dim0(), L = final_dist.dim2();
  require(final_dist.dim1() == n, ErrorKind::kDimMismatch,
          "word-pair distributions must be n x n x L");
  require(gold.size() == n * n, ErrorKind::kInvalidLabel,
          "gold grid must have n*n entries");
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t y = gold[i * n + j];
      require(y < L, ErrorKind::kInvalidLabel,
              "gold label " + std::to_string(y) + " at (" + std::to_string(i) +
                  "," + std::to_string(j) + ") outside [0, " + std::to_string(L) +
                  ")");
      check_distribution(final_dist.at(i, j), "final distribution");
      loss -= std::log(final_dist(i, j, y));
    }
  }
  return loss;
}

}  // namespace shapalign
