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

#include "shapalign/adaptive_fusion.hpp"

#include <cmath>
#include <string>

#include "shapalign/errors.hpp"

namespace shapalign {

namespace {

void check_linear(const Linear& l, std::size_t in, std::size_t out,
                  const char* name) {
  require(l.in_dim() == in && l.out_dim() == out && l.bias.dim() == out,
          ErrorKind::kDimMismatch,
          std::string(name) + " must map " + std::to_string(in) + " -> " +
              std::to_string(out));
  require(all_finite(l.weight.flat()) && all_finite(l.bias),
          ErrorKind::kInvalidArgument, std::string(name) + " has non-finite entries");
}

Linear random_linear(std::size_t in, std::size_t out, SplitMix64& rng,
                     double scale) {
  Linear l = Linear::zeros(in, out);
  for (double& w : l.weight.flat()) w = rng.uniform(-scale, scale);
  for (double& b : l.bias) b = rng.uniform(-scale, scale);
  return l;
}

// Row r of the gate input is [x_r | bridge].
Mat concat_bridge(const Mat& x, const Vec& bridge) {
  Mat out(x.rows(), x.cols() + bridge.dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto dst = out.row(r);
    const auto src = x.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
    std::copy(bridge.begin(), bridge.end(), dst.begin() + static_cast<std::ptrdiff_t>(x.cols()));
  }
  return out;
}

Mat gate_rows(const Mat& x, const Vec& bridge, const Linear& gate) {
  Mat g = gate.apply_rows(concat_bridge(x, bridge));
  for (double& v : g.flat()) v = std::tanh(v);
  return g;
}

Mat mix(const Mat& x, const Mat& g, const Vec& bridge) {
  require(x.rows() == g.rows() && x.cols() == g.cols() && x.cols() == bridge.dim(),
          ErrorKind::kDimMismatch, "gated_mix shapes disagree");
  Mat out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      out(r, c) = g(r, c) * x(r, c) + (1.0 - g(r, c)) * bridge[c];
  return out;
}

// Accumulates dW += G^T X and db += colsum(G) for y = W x + b applied rowwise.
void accumulate_linear(Linear& grad, const Mat& x, const Mat& g) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t o = 0; o < g.cols(); ++o) {
      const double go = g(r, o);
      grad.bias[o] += go;
      auto wrow = grad.weight.row(o);
      const auto xrow = x.row(r);
      for (std::size_t i = 0; i < x.cols(); ++i) wrow[i] += go * xrow[i];
    }
  }
}

// Backward through x' = g*x + (1-g)*B with g = tanh([x|B] W^T + b).
// Adds into grad_x, grad_bridge and the gate's parameter gradient.
void gate_mix_backward(const Mat& x, const Vec& bridge, const Mat& g,
                       const Linear& gate, const Mat& grad_mixed, Mat& grad_x,
                       Vec& grad_bridge, Linear& grad_gate) {
  const std::size_t width = x.cols();
  const Mat gate_in = concat_bridge(x, bridge);
  Mat grad_z(x.rows(), width);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double gm = grad_mixed(r, c);
      const double gv = g(r, c);
      grad_x(r, c) += gm * gv;
      grad_bridge[c] += gm * (1.0 - gv);
      grad_z(r, c) = gm * (x(r, c) - bridge[c]) * (1.0 - gv * gv);
    }
  }
  accumulate_linear(grad_gate, gate_in, grad_z);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t o = 0; o < width; ++o) {
      const double gz = grad_z(r, o);
      const auto wrow = gate.weight.row(o);
      for (std::size_t c = 0; c < width; ++c) {
        grad_x(r, c) += gz * wrow[c];
        grad_bridge[c] += gz * wrow[width + c];
      }
    }
  }
}

}  // namespace

void FusionParams::validate(std::size_t text_dim, std::size_t image_dim) const {
  const std::size_t D = width();
  require(D >= 1, ErrorKind::kDimMismatch, "fusion width must be >= 1");
  check_linear(query, image_dim, D, "query projection");
  check_linear(key, text_dim, D, "key projection");
  check_linear(value, text_dim, D, "value projection");
  check_linear(context, text_dim, D, "context projection");
  check_linear(query_gate, 2 * D, D, "query gate");
  check_linear(key_gate, 2 * D, D, "key gate");
}

FusionParams FusionParams::zeros(std::size_t text_dim, std::size_t image_dim,
                                 std::size_t width) {
  return FusionParams{Linear::zeros(image_dim, width),
                      Linear::zeros(text_dim, width),
                      Linear::zeros(text_dim, width),
                      Linear::zeros(text_dim, width),
                      Linear::zeros(2 * width, width),
                      Linear::zeros(2 * width, width)};
}

FusionParams FusionParams::random(std::size_t text_dim, std::size_t image_dim,
                                  std::size_t width, SplitMix64& rng,
                                  double scale) {
  FusionParams p;
  p.query = random_linear(image_dim, width, rng, scale);
  p.key = random_linear(text_dim, width, rng, scale);
  p.value = random_linear(text_dim, width, rng, scale);
  p.context = random_linear(text_dim, width, rng, scale);
  p.query_gate = random_linear(2 * width, width, rng, scale);
  p.key_gate = random_linear(2 * width, width, rng, scale);
  return p;
}

Projections project(const FusionInput& input, const FusionParams& params) {
  require(input.text.rows() >= 1 && input.context.rows() >= 1 &&
              input.image.rows() >= 1,
          ErrorKind::kDimMismatch, "fusion inputs need at least one row each");
  require(input.text.cols() == input.context.cols(), ErrorKind::kDimMismatch,
          "text and context token widths differ");
  params.validate(input.text.cols(), input.image.cols());
  return Projections{params.query.apply_rows(input.image),
                     params.key.apply_rows(input.text),
                     params.value.apply_rows(input.text),
                     params.context.apply_rows(input.context)};
}

Vec bridging_term(const Mat& context) {
  // colmean(C^T C) / sqrt(D) expands to kappa * sum_r rowsum(C_r) * C_r.
  const std::size_t D = context.cols();
  require(D >= 1, ErrorKind::kDimMismatch, "context width must be >= 1");
  const double kappa = 1.0 / (static_cast<double>(D) * std::sqrt(static_cast<double>(D)));
  Vec bridge(D);
  for (std::size_t r = 0; r < context.rows(); ++r) {
    const auto row = context.row(r);
    double rowsum = 0.0;
    for (double v : row) rowsum += v;
    for (std::size_t c = 0; c < D; ++c) bridge[c] += kappa * rowsum * row[c];
  }
  return bridge;
}

Gates gates(const Mat& queries, const Mat& keys, const Vec& bridge,
            const FusionParams& params) {
  require(queries.cols() == bridge.dim() && keys.cols() == bridge.dim(),
          ErrorKind::kDimMismatch, "gate inputs must have width D");
  return Gates{gate_rows(queries, bridge, params.query_gate),
               gate_rows(keys, bridge, params.key_gate)};
}

MixedQueryKey gated_mix(const Mat& queries, const Mat& keys, const Vec& bridge,
                        const Gates& g) {
  return MixedQueryKey{mix(queries, g.query, bridge), mix(keys, g.key, bridge)};
}

Mat attention_weights(const Mat& queries, const Mat& keys) {
  require(queries.cols() == keys.cols(), ErrorKind::kDimMismatch,
          "query and key widths differ");
  require(keys.rows() >= 1, ErrorKind::kDimMismatch, "attention needs >= 1 key");
  Mat scores = matmul_transposed(queries, keys);
  const double scale = std::sqrt(static_cast<double>(queries.cols()));
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto row = scores.row(r);
    for (double& s : row) s /= scale;
    const Vec p = softmax_temp(row, 1.0);
    std::copy(p.begin(), p.end(), row.begin());
  }
  return scores;
}

Mat cross_attention(const Mat& queries, const Mat& keys, const Mat& values) {
  require(keys.rows() == values.rows(), ErrorKind::kDimMismatch,
          "keys and values need the same row count");
  require(values.cols() == queries.cols(), ErrorKind::kDimMismatch,
          "value width must equal D");
  return matmul(attention_weights(queries, keys), values);
}

Mat fusion_forward(const FusionInput& input, const FusionParams& params) {
  const Projections p = project(input, params);
  const Vec bridge = bridging_term(p.context);
  const Gates g = gates(p.queries, p.keys, bridge, params);
  const MixedQueryKey mixed = gated_mix(p.queries, p.keys, bridge, g);
  return cross_attention(mixed.queries, mixed.keys, p.values);
}

FusionParams fusion_backward(const FusionInput& input, const FusionParams& params,
                             const Mat& grad_output) {
  const Projections p = project(input, params);
  const std::size_t D = params.width();
  const Vec bridge = bridging_term(p.context);
  const Gates g = gates(p.queries, p.keys, bridge, params);
  const MixedQueryKey mixed = gated_mix(p.queries, p.keys, bridge, g);
  const Mat attn = attention_weights(mixed.queries, mixed.keys);
  require(grad_output.rows() == attn.rows() && grad_output.cols() == D,
          ErrorKind::kDimMismatch, "grad_output must be n_v x D");

  FusionParams grad =
      FusionParams::zeros(input.text.cols(), input.image.cols(), D);

  // M = A V
  const Mat grad_attn = matmul_transposed(grad_output, p.values);
  const Mat grad_values = matmul(transpose(attn), grad_output);

  // Row-wise softmax, then the 1/sqrt(D) scaling.
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(D));
  Mat grad_scores(attn.rows(), attn.cols());
  for (std::size_t r = 0; r < attn.rows(); ++r) {
    const double inner = dot(grad_attn.row(r), attn.row(r));
    for (std::size_t t = 0; t < attn.cols(); ++t)
      grad_scores(r, t) = attn(r, t) * (grad_attn(r, t) - inner) * inv_scale;
  }
  const Mat grad_mixed_q = matmul(grad_scores, mixed.keys);
  const Mat grad_mixed_k = matmul(transpose(grad_scores), mixed.queries);

  Mat grad_q(p.queries.rows(), D);
  Mat grad_k(p.keys.rows(), D);
  Vec grad_bridge(D);
  gate_mix_backward(p.queries, bridge, g.query, params.query_gate, grad_mixed_q,
                    grad_q, grad_bridge, grad.query_gate);
  gate_mix_backward(p.keys, bridge, g.key, params.key_gate, grad_mixed_k, grad_k,
                    grad_bridge, grad.key_gate);

  // B[c] = kappa * sum_r s_r C[r][c], s_r = sum_c C[r][c]
  const double kappa = inv_scale / static_cast<double>(D);
  Mat grad_c(p.context.rows(), D);
  for (std::size_t r = 0; r < p.context.rows(); ++r) {
    const auto row = p.context.row(r);
    double rowsum = 0.0;
    for (double v : row) rowsum += v;
    const double gb_dot_row = dot(grad_bridge, row);
    for (std::size_t c = 0; c < D; ++c)
      grad_c(r, c) = kappa * (gb_dot_row + rowsum * grad_bridge[c]);
  }

  accumulate_linear(grad.query, input.image, grad_q);
  accumulate_linear(grad.key, input.text, grad_k);
  accumulate_linear(grad.value, input.text, grad_values);
  accumulate_linear(grad.context, input.context, grad_c);
  return grad;
}

}  // namespace shapalign
