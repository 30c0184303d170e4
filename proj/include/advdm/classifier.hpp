// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "advdm/autodiff.hpp"
#include "advdm/nn.hpp"

namespace advdm {

struct ClassifierConfig {
  std::size_t input_dim = 256;
  std::size_t hidden = 64;
  std::size_t num_classes = 4;
};

/// Small MLP classifier; the transfer-attack surrogate.
class Classifier {
 public:
  Classifier(const ClassifierConfig& config, RngStream& init);
  static Classifier from_parameters(const ClassifierConfig& config, ParameterSet params);

  const ClassifierConfig& config() const noexcept { return config_; }
  const ParameterSet& parameters() const noexcept { return params_; }
  ParameterSet& parameters() noexcept { return params_; }

  Var logits(GradientTape& tape, Var x) const;
  Var logits_bound(const BoundParameters& bound, Var x) const;
  std::vector<int> predict(const Tensor& x) const;

 private:
  Classifier() = default;
  ClassifierConfig config_;
  ParameterSet params_;
  Mlp net_;
};

struct ClassifierTrainConfig {
  std::size_t steps = 1500;
  std::size_t batch = 64;
  float learning_rate = 2e-3f;
};

struct ClassifierTrainResult {
  Classifier model;
  std::vector<float> loss_curve;
  double train_accuracy = 0.0;
};

ClassifierTrainResult train_classifier(const Tensor& data, std::span<const int> labels, const ClassifierConfig& config,
                                       const ClassifierTrainConfig& train, RngStream& rng);

double accuracy(const Classifier& model, const Tensor& data, std::span<const int> labels);

}  // namespace advdm
