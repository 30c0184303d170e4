// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "advdm/tensor.hpp"

namespace advdm {

class GradientTape;

/// Handle to a value recorded on a GradientTape. Invalidated when the tape is cleared.
struct Var {
  GradientTape* tape = nullptr;
  std::uint32_t index = 0;
  std::uint64_t generation = 0;
};

/// Linear record of primitive operations for reverse-mode differentiation.
///
/// Inputs, parameters and condition vectors are all handled the same way:
/// whatever the caller wants a gradient for is registered with `leaf()`.
/// A backward pass (`grad_wrt` / `gradients`) consumes the record and leaves
/// the tape empty.
class GradientTape {
 public:
  using BackwardFn = std::function<void(GradientTape&, std::size_t node)>;

  GradientTape() = default;
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  /// d(output)/d(leaf). `output` must hold exactly one element.
  Tensor grad_wrt(Var output, Var leaf);
  std::vector<Tensor> gradients(Var output, std::span<const Var> leaves);

  void clear() noexcept;

  // Primitive-implementation interface.
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
  }
  std::size_t node_of(Var v) const;
  const Tensor& node_value(std::size_t node) const { return nodes_[node].value; }
  const Tensor& node_grad(std::size_t node) const { return nodes_[node].grad; }
  /// Gradient accumulator of a node, or nullptr if no gradient flows into it.
  Tensor* grad_slot(std::size_t node);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  void check(Var v) const;

  std::deque<Node> nodes_;  // references into values survive later records
  std::uint64_t generation_ = 1;
};

/// Differentiable primitives. Every function records onto the tape its arguments belong to.
namespace ops {

/// input[n, i] * weights[i, o] + bias[1, o]
Var affine(Var input, Var weights, Var bias);
Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, float factor);
Var add_scalar(Var a, float offset);
/// a[n, d] + row[1, d]
Var add_row(Var a, Var row);
/// a[n, d] scaled row-wise by s[n, 1]
Var scale_rows(Var a, Var s);

Var square(Var a);
Var silu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
/// sqrt(a^2 + eps^2), a smooth stand-in for |a|.
Var smooth_abs(Var a, float eps);
Var sqrt(Var a);

/// Scalar [1, 1] sum of all elements.
Var sum(Var a);
Var mean(Var a);
/// Per-row sum: [n, d] -> [n, 1].
Var row_sum(Var a);

Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
/// out[i, :] = table[index[i], :]
Var gather_rows(Var table, std::span<const std::size_t> index);
/// out[:, j] = a[:, index[j]]
Var gather_cols(Var a, std::span<const std::size_t> index);
/// Repeats a [1, d] row `count` times.
Var broadcast_rows(Var row, std::size_t count);

/// Mean cross-entropy of logits[n, C] against integer labels.
Var cross_entropy(Var logits, std::span<const int> labels);

}  // namespace ops

/// Reverse-mode gradient of a scalar-valued function; convenience for tests and oracles.
Tensor gradient(const std::function<Var(GradientTape&, Var)>& fn, const Tensor& at);

}  // namespace advdm
