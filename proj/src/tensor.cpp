// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "advdm/errors.hpp"

namespace advdm {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_size(shape_)) {
    throw DimensionError("tensor payload of " + std::to_string(data_.size()) +
                         " values does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t n = rows.size();
  const std::size_t d = n ? rows.begin()->size() : 0;
  std::vector<float> values;
  values.reserve(n * d);
  for (const auto& r : rows) {
    if (r.size() != d) throw DimensionError("ragged rows in Tensor::from_rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor({n, d}, std::move(values));
}

Tensor Tensor::row(std::initializer_list<float> values) {
  return Tensor({1, values.size()}, std::vector<float>(values));
}

std::size_t Tensor::rows() const noexcept { return shape_.empty() ? 1 : shape_[0]; }

std::size_t Tensor::cols() const noexcept {
  if (shape_.size() <= 1) return 1;
  std::size_t c = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) c *= shape_[i];
  return c;
}

std::span<const float> Tensor::row_span(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const float>(data_).subspan(r * c, c);
}

std::span<float> Tensor::row_span(std::size_t r) {
  const std::size_t c = cols();
  return std::span<float>(data_).subspan(r * c, c);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* context) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(context) + ": shape " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank2(const Tensor& t, const char* context) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(context) + ": expected rank-2 tensor, got " +
                         shape_string(t.shape()));
  }
}

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t count) {
  require_rank2(t, "slice_rows");
  if (begin + count > t.rows()) throw DimensionError("slice_rows: range exceeds row count");
  const std::size_t c = t.cols();
  std::vector<float> out(t.data() + begin * c, t.data() + (begin + count) * c);
  return Tensor({count, c}, std::move(out));
}

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows) {
  require_rank2(t, "gather_rows");
  const std::size_t c = t.cols();
  Tensor out({rows.size(), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= t.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy_n(t.data() + rows[i] * c, c, out.data() + i * c);
  }
  return out;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) return Tensor({0, 0});
  const std::size_t c = parts.front().cols();
  std::size_t n = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.cols() != c) throw DimensionError("concat_rows: column mismatch");
    n += p.rows();
  }
  std::vector<float> out;
  out.reserve(n * c);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return Tensor({n, c}, std::move(out));
}

Tensor repeat_row(const Tensor& row, std::size_t count) {
  if (row.rows() != 1) throw DimensionError("repeat_row: expected a single row");
  const std::size_t c = row.cols();
  Tensor out({count, c});
  for (std::size_t i = 0; i < count; ++i) std::copy_n(row.data(), c, out.data() + i * c);
  return out;
}

Tensor sign(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float v = x[i];
    out[i] = v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f);
  }
  return out;
}

float max_abs(const Tensor& x) {
  float m = 0.0f;
  for (float v : x.values()) m = std::max(m, std::fabs(v));
  return m;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_abs_diff");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(double(a[i]) - double(b[i]));
  return s / double(a.size());
}

double squared_norm(const Tensor& x) {
  double s = 0.0;
  for (float v : x.values()) s += double(v) * double(v);
  return s;
}

bool all_finite(const Tensor& x) {
  return std::all_of(x.values().begin(), x.values().end(), [](float v) { return std::isfinite(v); });
}

Tensor column_mean(const Tensor& x) {
  require_rank2(x, "column_mean");
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> acc(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) acc[c] += x.at(r, c);
  Tensor out({1, d});
  for (std::size_t c = 0; c < d; ++c) out[c] = n ? float(acc[c] / double(n)) : 0.0f;
  return out;
}

}  // namespace advdm
