// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace advdm {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major float32 array.
///
/// Most of the library works on rank-2 tensors laid out as [rows, features]:
/// a batch of flattened images, latents, noise draws or perturbations.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  /// Rank-2 tensor from nested initializer lists (tests and fixtures).
  static Tensor from_rows(std::initializer_list<std::initializer_list<float>> rows);
  static Tensor row(std::initializer_list<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Leading extent; 1 for rank-0 tensors.
  std::size_t rows() const noexcept;
  /// Product of the trailing extents.
  std::size_t cols() const noexcept;

  std::span<const float> values() const noexcept { return data_; }
  std::span<float> values() noexcept { return data_; }
  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }

  float operator[](std::size_t i) const noexcept { return data_[i]; }
  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  float& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  std::span<const float> row_span(std::size_t r) const;
  std::span<float> row_span(std::size_t r);

  Tensor reshaped(Shape shape) const;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// Bitwise comparison of shape and payload (distinguishes -0 from 0, NaN payloads compare equal).
bool bitwise_equal(const Tensor& a, const Tensor& b);

void require_same_shape(const Tensor& a, const Tensor& b, const char* context);
void require_rank2(const Tensor& t, const char* context);

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t count);
Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows);
Tensor concat_rows(std::span<const Tensor> parts);
/// Repeats a single-row tensor `count` times.
Tensor repeat_row(const Tensor& row, std::size_t count);

/// Elementwise sign: -1, 0 or +1.
Tensor sign(const Tensor& x);

float max_abs(const Tensor& x);
float max_abs_diff(const Tensor& a, const Tensor& b);
double mean_abs_diff(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& x);
bool all_finite(const Tensor& x);

/// Per-column mean of a rank-2 tensor, returned as a [1, cols] tensor.
Tensor column_mean(const Tensor& x);

}  // namespace advdm
