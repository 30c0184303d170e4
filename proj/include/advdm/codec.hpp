// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "advdm/autodiff.hpp"
#include "advdm/nn.hpp"
#include "advdm/rng.hpp"

namespace advdm {

struct CodecConfig {
  std::size_t input_dim = 256;
  std::size_t latent_dim = 8;
  std::size_t hidden = 128;
  /// Sigmoid decoder output for [0, 1] pixel data; identity otherwise.
  bool bounded_output = true;
};

/// Deterministic autoencoder defining the latent space. Encoder output is standardised per
/// dimension (shift/scale fitted after training) so latents are roughly unit-variance.
class LatentCodec {
 public:
  LatentCodec(const CodecConfig& config, RngStream& init);
  static LatentCodec from_parameters(const CodecConfig& config, ParameterSet params);

  const CodecConfig& config() const noexcept { return config_; }
  const ParameterSet& parameters() const noexcept { return params_; }
  ParameterSet& parameters() noexcept { return params_; }
  std::size_t input_dim() const noexcept { return config_.input_dim; }
  std::size_t latent_dim() const noexcept { return config_.latent_dim; }

  Tensor encode(const Tensor& x) const;
  Tensor decode(const Tensor& z) const;
  /// Differentiable encoder with parameters recorded as constants.
  Var encode(GradientTape& tape, Var x) const;
  Var encode_bound(const BoundParameters& bound, Var x) const;
  Var decode_bound(const BoundParameters& bound, Var z) const;

  /// Fits the latent standardisation to the encoder's raw outputs on `data`.
  void fit_standardization(const Tensor& data);

 private:
  LatentCodec() = default;
  Var raw_encode(const BoundParameters& bound, Var x) const;

  CodecConfig config_;
  ParameterSet params_;
  Mlp encoder_;
  Mlp decoder_;
  std::size_t shift_index_ = 0;
  std::size_t scale_index_ = 0;
};

struct CodecTrainConfig {
  std::size_t steps = 3000;
  std::size_t batch = 64;
  float learning_rate = 2e-3f;
  double validation_fraction = 0.1;
  double threshold = 0.02;
};

struct CodecTrainResult {
  LatentCodec codec;
  std::vector<float> loss_curve;
  double validation_mse = 0.0;
  bool met_threshold = false;
};

CodecTrainResult train_codec(const Tensor& data, const CodecConfig& config, const CodecTrainConfig& train,
                             RngStream& rng);

/// Mean squared reconstruction error per element.
double reconstruction_mse(const LatentCodec& codec, const Tensor& data);

}  // namespace advdm
