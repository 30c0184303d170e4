// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/nn.hpp"

#include <cmath>
#include <cstring>

#include "advdm/errors.hpp"

namespace advdm {

std::size_t ParameterSet::add(std::string name, Tensor value) {
  for (const auto& n : names_)
    if (n == name) throw Error("duplicate parameter name " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::size_t ParameterSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw FormatError("missing parameter array '" + std::string(name) + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

bool ParameterSet::bitwise_equal(const ParameterSet& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (names_[i] != other.names_[i] || !advdm::bitwise_equal(values_[i], other.values_[i])) return false;
  }
  return true;
}

BoundParameters BoundParameters::as_leaves(GradientTape& tape, const ParameterSet& params) {
  BoundParameters b;
  b.vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) b.vars_.push_back(tape.leaf(params[i]));
  return b;
}

BoundParameters BoundParameters::as_constants(GradientTape& tape, const ParameterSet& params) {
  BoundParameters b;
  b.vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) b.vars_.push_back(tape.constant(params[i]));
  return b;
}

Var activate(Var x, Activation kind) {
  switch (kind) {
    case Activation::identity: return x;
    case Activation::silu: return ops::silu(x);
    case Activation::tanh: return ops::tanh(x);
    case Activation::sigmoid: return ops::sigmoid(x);
  }
  return x;
}

Mlp::Mlp(std::vector<std::size_t> widths, Activation hidden, Activation output, ParameterSet& params,
         std::string_view prefix, RngStream& rng)
    : widths_(std::move(widths)), hidden_(hidden), output_(output) {
  if (widths_.size() < 2) throw ConfigError("Mlp needs at least input and output widths");
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const std::size_t in = widths_[l], out = widths_[l + 1];
    // Uniform fan-in initialisation.
    const float bound = 1.0f / std::sqrt(float(in));
    weight_index_.push_back(params.add(std::string(prefix) + ".w" + std::to_string(l), uniform(rng, {in, out}, -bound, bound)));
    bias_index_.push_back(params.add(std::string(prefix) + ".b" + std::to_string(l), Tensor({1, out}, 0.0f)));
  }
}

Mlp Mlp::attach(std::vector<std::size_t> widths, Activation hidden, Activation output, const ParameterSet& params,
                std::string_view prefix) {
  Mlp m;
  m.widths_ = std::move(widths);
  m.hidden_ = hidden;
  m.output_ = output;
  for (std::size_t l = 0; l + 1 < m.widths_.size(); ++l) {
    const std::size_t w = params.index_of(std::string(prefix) + ".w" + std::to_string(l));
    const std::size_t b = params.index_of(std::string(prefix) + ".b" + std::to_string(l));
    if (params[w].shape() != Shape{m.widths_[l], m.widths_[l + 1]} || params[b].size() != m.widths_[l + 1]) {
      throw FormatError("parameter '" + params.name(w) + "' has an unexpected shape");
    }
    m.weight_index_.push_back(w);
    m.bias_index_.push_back(b);
  }
  return m;
}

Var Mlp::forward(const BoundParameters& bound, Var x) const {
  Var h = x;
  const std::size_t layers = weight_index_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = ops::affine(h, bound[weight_index_[l]], bound[bias_index_[l]]);
    h = activate(h, l + 1 < layers ? hidden_ : output_);
  }
  return h;
}

void Adam::step(ParameterSet& params, std::span<const Tensor> grads) {
  std::vector<Tensor*> ptrs;
  ptrs.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) ptrs.push_back(&params[i]);
  step(std::span<Tensor* const>(ptrs), grads);
}

void Adam::step(std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) throw DimensionError("Adam: gradient count differs from parameter count");
  if (m_.empty()) {
    for (Tensor* p : params) {
      m_.emplace_back(p->shape(), 0.0f);
      v_.emplace_back(p->shape(), 0.0f);
    }
  }
  ++t_;
  const float b1 = config_.beta1, b2 = config_.beta2;
  const float c1 = 1.0f - std::pow(b1, float(t_));
  const float c2 = 1.0f - std::pow(b2, float(t_));
  const float lr = config_.learning_rate;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    require_same_shape(p, g, "Adam::step");
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace advdm
