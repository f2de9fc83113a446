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

// Dense double-precision kernels shared by every other module. Nothing here
// tries to be fast; it tries to be obviously correct.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace shapalign {

// Norms at or below this are treated as zero by cosine_sim.
inline constexpr double kMinNorm = 1e-12;

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  Vec(std::initializer_list<double> values) : data_(values) {}
  explicit Vec(std::vector<double> values) : data_(std::move(values)) {}
  explicit Vec(std::span<const double> values)
      : data_(values.begin(), values.end()) {}

  std::size_t dim() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  operator std::span<const double>() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  const std::vector<double>& values() const noexcept { return data_; }

  friend bool operator==(const Vec&, const Vec&) = default;

 private:
  std::vector<double> data_;
};

// Row-major dense matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  // Nested initializer: Mat{{1, 2}, {3, 4}}. All rows must have equal length.
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

bool all_finite(std::span<const double> values);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// <a,b> / (|a||b|). Throws kZeroNorm when either norm is <= kMinNorm and
// kDimMismatch on unequal lengths.
double cosine_sim(std::span<const double> a, std::span<const double> b);

// Accumulates upstream * d cos(a,b) / da into grad_a and likewise for b.
void cosine_sim_backward(std::span<const double> a, std::span<const double> b,
                         double upstream, std::span<double> grad_a,
                         std::span<double> grad_b);

// softmax(v / tau), max-subtracted.
Vec softmax_temp(std::span<const double> v, double tau);

// W x + b.
Vec affine(std::span<const double> x, const Mat& weight,
           std::span<const double> bias);

Vec normalized(std::span<const double> v);

Mat transpose(const Mat& a);
Mat matmul(const Mat& a, const Mat& b);
// a * b^T without materializing the transpose.
Mat matmul_transposed(const Mat& a, const Mat& b);

// A dense affine layer y = W x + b. W is (out x in).
struct Linear {
  Mat weight;
  Vec bias;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }

  Vec apply(std::span<const double> x) const {
    return affine(x, weight, bias);
  }
  // Applies the layer to every row of x.
  Mat apply_rows(const Mat& x) const;

  static Linear zeros(std::size_t in, std::size_t out);
  static Linear identity(std::size_t n);
};

}  // namespace shapalign
