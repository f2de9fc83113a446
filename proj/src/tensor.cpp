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

#include "shapalign/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shapalign/errors.hpp"

namespace shapalign {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kZeroNorm: return "ZeroNorm";
    case ErrorKind::kDimMismatch: return "DimMismatch";
    case ErrorKind::kNonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorKind::kInvalidCoalition: return "InvalidCoalition";
    case ErrorKind::kTooManyPlayers: return "TooManyPlayers";
    case ErrorKind::kNonPositiveStride: return "NonPositiveStride";
    case ErrorKind::kNegativeWeight: return "NegativeWeight";
    case ErrorKind::kInvalidLabel: return "InvalidLabel";
    case ErrorKind::kNotADistribution: return "NotADistribution";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    fail(ErrorKind::kDimMismatch, std::string(what) + ": " + std::to_string(a) +
                                      " vs " + std::to_string(b));
  }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  require_same_dim(rows_ * cols_, data_.size(), "Mat storage");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require_same_dim(r.size(), cols_, "Mat row length");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "cosine_sim");
  const double na = norm(a);
  const double nb = norm(b);
  require(na > kMinNorm && nb > kMinNorm, ErrorKind::kZeroNorm,
          "cosine_sim input norm <= 1e-12");
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

void cosine_sim_backward(std::span<const double> a, std::span<const double> b,
                         double upstream, std::span<double> grad_a,
                         std::span<double> grad_b) {
  require_same_dim(a.size(), b.size(), "cosine_sim_backward");
  const double na = norm(a);
  const double nb = norm(b);
  require(na > kMinNorm && nb > kMinNorm, ErrorKind::kZeroNorm,
          "cosine_sim input norm <= 1e-12");
  const double inv = 1.0 / (na * nb);
  const double c = dot(a, b) * inv;
  const double ca = c / (na * na);
  const double cb = c / (nb * nb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    grad_a[i] += upstream * (b[i] * inv - ca * a[i]);
    grad_b[i] += upstream * (a[i] * inv - cb * b[i]);
  }
}

Vec softmax_temp(std::span<const double> v, double tau) {
  require(tau > 0.0 && std::isfinite(tau), ErrorKind::kNonPositiveTemperature,
          "softmax temperature must be > 0");
  require(!v.empty(), ErrorKind::kDimMismatch, "softmax of empty vector");
  const double m = *std::max_element(v.begin(), v.end());
  Vec out(v.size());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp((v[i] - m) / tau);
    z += out[i];
  }
  for (double& x : out) x /= z;
  return out;
}

Vec affine(std::span<const double> x, const Mat& weight,
           std::span<const double> bias) {
  require_same_dim(weight.cols(), x.size(), "affine input");
  require_same_dim(weight.rows(), bias.size(), "affine bias");
  Vec out(weight.rows());
  for (std::size_t r = 0; r < weight.rows(); ++r) {
    const auto w = weight.row(r);
    double s = bias[r];
    for (std::size_t c = 0; c < x.size(); ++c) s += w[c] * x[c];
    out[r] = s;
  }
  return out;
}

Vec normalized(std::span<const double> v) {
  const double n = norm(v);
  require(n > kMinNorm, ErrorKind::kZeroNorm, "cannot normalize a zero vector");
  Vec out(v);
  for (double& x : out) x /= n;
  return out;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

Mat matmul(const Mat& a, const Mat& b) {
  require_same_dim(a.cols(), b.rows(), "matmul inner");
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t t = 0; t < a.cols(); ++t) {
      const double av = a(i, t);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += av * b(t, j);
    }
  return out;
}

Mat matmul_transposed(const Mat& a, const Mat& b) {
  require_same_dim(a.cols(), b.cols(), "matmul_transposed inner");
  Mat out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

Mat Linear::apply_rows(const Mat& x) const {
  require_same_dim(x.cols(), in_dim(), "Linear input width");
  require_same_dim(bias.dim(), out_dim(), "Linear bias");
  Mat out(x.rows(), out_dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Vec y = apply(x.row(r));
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

Linear Linear::zeros(std::size_t in, std::size_t out) {
  return Linear{Mat(out, in), Vec(out)};
}

Linear Linear::identity(std::size_t n) { return Linear{Mat::identity(n), Vec(n)}; }

}  // namespace shapalign
