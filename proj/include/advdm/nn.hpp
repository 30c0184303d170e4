// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "advdm/autodiff.hpp"
#include "advdm/rng.hpp"

namespace advdm {

/// Ordered, named collection of parameter arrays. Names are the checkpoint keys.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value);
  std::size_t size() const noexcept { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const Tensor& operator[](std::size_t i) const { return values_[i]; }
  Tensor& operator[](std::size_t i) { return values_[i]; }
  /// Index of `name`; throws FormatError if absent.
  std::size_t index_of(std::string_view name) const;
  const Tensor& get(std::string_view name) const { return values_[index_of(name)]; }

  std::size_t scalar_count() const;
  bool bitwise_equal(const ParameterSet& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

/// Parameters placed on a tape, either as differentiable leaves or as constants.
class BoundParameters {
 public:
  static BoundParameters as_leaves(GradientTape& tape, const ParameterSet& params);
  static BoundParameters as_constants(GradientTape& tape, const ParameterSet& params);

  Var operator[](std::size_t i) const { return vars_[i]; }
  std::span<const Var> vars() const noexcept { return vars_; }

 private:
  std::vector<Var> vars_;
};

enum class Activation { identity, silu, tanh, sigmoid };

Var activate(Var x, Activation kind);

/// Fully connected network: affine layers with `hidden` activation between them.
class Mlp {
 public:
  Mlp() = default;
  /// Registers weights "<prefix>.w<i>" / "<prefix>.b<i>" in `params`.
  Mlp(std::vector<std::size_t> widths, Activation hidden, Activation output, ParameterSet& params,
      std::string_view prefix, RngStream& rng);
  /// Rebinds to parameters already present in `params` (checkpoint loading).
  static Mlp attach(std::vector<std::size_t> widths, Activation hidden, Activation output, const ParameterSet& params,
                    std::string_view prefix);

  Var forward(const BoundParameters& bound, Var x) const;

  std::size_t input_width() const { return widths_.front(); }
  std::size_t output_width() const { return widths_.back(); }
  const std::vector<std::size_t>& widths() const { return widths_; }

 private:
  std::vector<std::size_t> widths_;
  Activation hidden_ = Activation::silu;
  Activation output_ = Activation::identity;
  std::vector<std::size_t> weight_index_;
  std::vector<std::size_t> bias_index_;
};

struct AdamConfig {
  float learning_rate = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One update of `params` (or of the subset selected by `indices`) from matching gradients.
  void step(ParameterSet& params, std::span<const Tensor> grads);
  void step(std::span<Tensor* const> params, std::span<const Tensor> grads);

  void set_learning_rate(float lr) noexcept { config_.learning_rate = lr; }
  float learning_rate() const noexcept { return config_.learning_rate; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t t_ = 0;
};

}  // namespace advdm
