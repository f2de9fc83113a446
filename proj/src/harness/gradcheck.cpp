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

#include "shapalign/harness/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <sstream>

#include "shapalign/adaptive_fusion.hpp"
#include "shapalign/alignment_loss.hpp"
#include "shapalign/decoders.hpp"
#include "shapalign/harness/report.hpp"
#include "shapalign/rng.hpp"

namespace shapalign::harness {

namespace {

// Compares analytic[i] against central differences of f in values[i].
void compare(std::span<double> values, std::span<const double> analytic,
             const std::function<double()>& f, GradCheckResult& out) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    const auto at = [&](double offset) {
      values[i] = saved + offset;
      const double y = f();
      values[i] = saved;
      return y;
    };
    const double h = kFivePointStep, s = kFiniteDifferenceStep;
    const double five = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
    const double two = (at(s) - at(-s)) / (2.0 * s);
    out.max_rel_err = std::max(out.max_rel_err, relative_error(analytic[i], five));
    out.max_abs_err = std::max(out.max_abs_err, std::abs(analytic[i] - five));
    out.max_rel_err_two_point =
        std::max(out.max_rel_err_two_point, relative_error(analytic[i], two));
    ++out.entries;
  }
}

std::size_t pick(SplitMix64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

Vec random_vec(SplitMix64& rng, std::size_t d) {
  Vec v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

Mat random_mat(SplitMix64& rng, std::size_t rows, std::size_t cols) {
  Mat m(rows, cols);
  for (double& x : m.flat()) x = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult gradcheck_alignment(std::uint64_t seed, std::size_t instances,
                                    double tau) {
  GradCheckResult out;
  out.target = "alignment";
  for (std::size_t n = 0; n < instances; ++n) {
    SplitMix64 rng(derive_seed(seed, {n}));
    const std::size_t k = rng.below(2) == 0 ? 2 : 4;
    const std::size_t d = 8;
    EmbeddingBatch batch;
    for (std::size_t i = 0; i < k; ++i) {
      batch.contexts.push_back(random_vec(rng, d));
      batch.texts.push_back(random_vec(rng, d));
      batch.images.push_back(random_vec(rng, d));
    }
    AlignmentOptions opts;
    opts.tau = tau;
    opts.seed = rng.next();
    const double alpha = rng.uniform(0.1, 1.0);
    const double beta = rng.uniform(0.1, 1.0);

    const EmbeddingGrads g = loss_gradients(batch, opts, alpha, beta);
    const auto f = [&] {
      return alpha * semantic_loss(batch, opts) + beta * modality_loss(batch, opts);
    };
    for (std::size_t i = 0; i < k; ++i) {
      compare(batch.contexts[i].span(), g.contexts[i], f, out);
      compare(batch.texts[i].span(), g.texts[i], f, out);
      compare(batch.images[i].span(), g.images[i], f, out);
    }
    ++out.instances;
  }
  return out;
}

GradCheckResult gradcheck_fusion(std::uint64_t seed, std::size_t instances) {
  GradCheckResult out;
  out.target = "fusion";
  for (std::size_t n = 0; n < instances; ++n) {
    SplitMix64 rng(derive_seed(seed, {n}));
    const std::size_t d = pick(rng, 2, 4);
    const std::size_t d_img = pick(rng, 2, 4);
    const std::size_t width = pick(rng, 2, 8);
    FusionInput input{random_mat(rng, pick(rng, 1, 4), d),
                      random_mat(rng, pick(rng, 1, 4), d),
                      random_mat(rng, pick(rng, 1, 4), d_img)};
    FusionParams params = FusionParams::random(d, d_img, width, rng);
    const Mat upstream = random_mat(rng, input.image.rows(), width);

    const FusionParams grads = fusion_backward(input, params, upstream);
    const auto f = [&] {
      const Mat y = fusion_forward(input, params);
      double s = 0.0;
      for (std::size_t i = 0; i < y.flat().size(); ++i) s += y.flat()[i] * upstream.flat()[i];
      return s;
    };
    const auto layers = params.layers();
    const auto grad_layers = grads.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      compare(layers[l]->weight.flat(), grad_layers[l]->weight.flat(), f, out);
      compare(layers[l]->bias.span(), grad_layers[l]->bias, f, out);
    }
    ++out.instances;
  }
  return out;
}

GradCheckResult gradcheck_crf(std::uint64_t seed, std::size_t instances) {
  GradCheckResult out;
  out.target = "crf";
  for (std::size_t n = 0; n < instances; ++n) {
    SplitMix64 rng(derive_seed(seed, {n}));
    const std::size_t len = pick(rng, 1, 5);
    const std::size_t labels = pick(rng, 2, 4);
    CrfModel model = CrfModel::zeros(len, labels);
    for (double& x : model.emissions.flat()) x = rng.normal();
    for (double& x : model.transitions.flat()) x = rng.normal();
    for (double& x : model.start) x = rng.normal();
    for (double& x : model.end) x = rng.normal();
    std::vector<std::size_t> gold(len);
    for (auto& y : gold) y = rng.below(labels);

    const CrfGradients g = crf_nll_gradients(model, gold);
    const auto f = [&] { return crf_nll(model, gold); };
    compare(model.emissions.flat(), g.emissions.flat(), f, out);
    compare(model.transitions.flat(), g.transitions.flat(), f, out);
    compare(model.start.span(), g.start, f, out);
    compare(model.end.span(), g.end, f, out);
    ++out.instances;
  }
  return out;
}

std::string gradcheck_csv(const std::vector<GradCheckResult>& results) {
  std::ostringstream csv;
  csv << "target,instances,entries,max_rel_err,max_abs_err,max_rel_err_two_point\n";
  for (const auto& r : results)
    csv << r.target << ',' << r.instances << ',' << r.entries << ','
        << format_double(r.max_rel_err) << ',' << format_double(r.max_abs_err) << ','
        << format_double(r.max_rel_err_two_point) << '\n';
  return csv.str();
}

}  // namespace shapalign::harness
