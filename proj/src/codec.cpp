// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advdm/errors.hpp"

namespace advdm {

namespace {

std::vector<std::size_t> encoder_widths(const CodecConfig& c) { return {c.input_dim, c.hidden, c.hidden, c.latent_dim}; }
std::vector<std::size_t> decoder_widths(const CodecConfig& c) { return {c.latent_dim, c.hidden, c.hidden, c.input_dim}; }

}  // namespace

LatentCodec::LatentCodec(const CodecConfig& config, RngStream& init) : config_(config) {
  if (config.input_dim == 0 || config.latent_dim == 0 || config.hidden == 0) throw ConfigError("invalid codec configuration");
  encoder_ = Mlp(encoder_widths(config_), Activation::silu, Activation::identity, params_, "enc", init);
  decoder_ = Mlp(decoder_widths(config_), Activation::silu,
                 config_.bounded_output ? Activation::sigmoid : Activation::identity, params_, "dec", init);
  shift_index_ = params_.add("latent_shift", Tensor({1, config_.latent_dim}, 0.0f));
  scale_index_ = params_.add("latent_scale", Tensor({1, config_.latent_dim}, 1.0f));
}

LatentCodec LatentCodec::from_parameters(const CodecConfig& config, ParameterSet params) {
  LatentCodec c;
  c.config_ = config;
  c.params_ = std::move(params);
  c.encoder_ = Mlp::attach(encoder_widths(config), Activation::silu, Activation::identity, c.params_, "enc");
  c.decoder_ = Mlp::attach(decoder_widths(config), Activation::silu,
                           config.bounded_output ? Activation::sigmoid : Activation::identity, c.params_, "dec");
  c.shift_index_ = c.params_.index_of("latent_shift");
  c.scale_index_ = c.params_.index_of("latent_scale");
  return c;
}

Var LatentCodec::raw_encode(const BoundParameters& bound, Var x) const { return encoder_.forward(bound, x); }

Var LatentCodec::encode_bound(const BoundParameters& bound, Var x) const {
  const Tensor& xv = x.tape->value(x);
  if (xv.rank() != 2 || xv.cols() != config_.input_dim) {
    throw DimensionError("encoder expects rows of " + std::to_string(config_.input_dim) + " features, got " +
                         shape_string(xv.shape()));
  }
  const Var raw = raw_encode(bound, x);
  const std::size_t n = xv.rows();
  // (raw - shift) * scale, with the per-dimension affine applied through broadcast ops.
  const Var shifted = ops::sub(raw, ops::broadcast_rows(bound[shift_index_], n));
  return ops::mul(shifted, ops::broadcast_rows(bound[scale_index_], n));
}

Var LatentCodec::decode_bound(const BoundParameters& bound, Var z) const {
  const Tensor& zv = z.tape->value(z);
  if (zv.rank() != 2 || zv.cols() != config_.latent_dim) {
    throw DimensionError("decoder expects rows of " + std::to_string(config_.latent_dim) + " features, got " +
                         shape_string(zv.shape()));
  }
  GradientTape& tape = *z.tape;
  const std::size_t n = zv.rows();
  const Tensor& scale = params_[scale_index_];
  Tensor inv(scale.shape());
  for (std::size_t i = 0; i < scale.size(); ++i) inv[i] = 1.0f / scale[i];
  const Var raw = ops::add(ops::mul(z, ops::broadcast_rows(tape.constant(std::move(inv)), n)),
                           ops::broadcast_rows(bound[shift_index_], n));
  return decoder_.forward(bound, raw);
}

Var LatentCodec::encode(GradientTape& tape, Var x) const {
  const BoundParameters bound = BoundParameters::as_constants(tape, params_);
  return encode_bound(bound, x);
}

Tensor LatentCodec::encode(const Tensor& x) const {
  if (x.rows() == 0) return Tensor({0, config_.latent_dim});
  GradientTape tape;
  return tape.value(encode(tape, tape.constant(x)));
}

Tensor LatentCodec::decode(const Tensor& z) const {
  if (z.rows() == 0) return Tensor({0, config_.input_dim});
  GradientTape tape;
  const BoundParameters bound = BoundParameters::as_constants(tape, params_);
  return tape.value(decode_bound(bound, tape.constant(z)));
}

void LatentCodec::fit_standardization(const Tensor& data) {
  GradientTape tape;
  const BoundParameters bound = BoundParameters::as_constants(tape, params_);
  const Tensor raw = tape.value(raw_encode(bound, tape.constant(data)));
  const std::size_t n = raw.rows(), d = raw.cols();
  Tensor shift({1, d}), scale({1, d});
  for (std::size_t c = 0; c < d; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t r = 0; r < n; ++r) m += raw.at(r, c);
    m /= double(std::max<std::size_t>(n, 1));
    for (std::size_t r = 0; r < n; ++r) v += (raw.at(r, c) - m) * (raw.at(r, c) - m);
    v /= double(std::max<std::size_t>(n > 1 ? n - 1 : 1, 1));
    shift[c] = float(m);
    scale[c] = float(1.0 / std::sqrt(std::max(v, 1e-8)));
  }
  params_[shift_index_] = std::move(shift);
  params_[scale_index_] = std::move(scale);
}

double reconstruction_mse(const LatentCodec& codec, const Tensor& data) {
  if (data.rows() == 0) return 0.0;
  const Tensor rec = codec.decode(codec.encode(data));
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) s += double(rec[i] - data[i]) * double(rec[i] - data[i]);
  return s / double(data.size());
}

CodecTrainResult train_codec(const Tensor& data, const CodecConfig& config, const CodecTrainConfig& train,
                             RngStream& rng) {
  require_rank2(data, "train_codec");
  if (data.rows() == 0) throw PreconditionError("train_codec: empty dataset");
  if (data.cols() != config.input_dim) throw DimensionError("train_codec: data width differs from input_dim");
  if (train.batch == 0) throw ConfigError("train_codec: batch size must be positive");

  // Shuffle once and hold out a validation split.
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[std::size_t(rng.uniform_int(0, std::int64_t(i) - 1))]);
  std::size_t n_val = std::size_t(double(data.rows()) * train.validation_fraction);
  if (data.rows() > 1) n_val = std::clamp<std::size_t>(n_val, 1, data.rows() - 1);
  else n_val = 0;
  const std::vector<std::size_t> val_rows(order.begin(), order.begin() + std::ptrdiff_t(n_val));
  const std::vector<std::size_t> train_rows(order.begin() + std::ptrdiff_t(n_val), order.end());
  const Tensor train_data = gather_rows(data, train_rows);
  const Tensor val_data = n_val ? gather_rows(data, val_rows) : train_data;

  LatentCodec codec(config, rng);
  ParameterSet& params = codec.parameters();
  // Standardisation arrays are fixed during training.
  const std::size_t trainable = params.size() - 2;
  Adam adam(AdamConfig{train.learning_rate});
  CodecTrainResult result{codec, {}, 0.0, false};
  result.loss_curve.reserve(train.steps);

  for (std::size_t step = 0; step < train.steps; ++step) {
    std::vector<std::size_t> rows(train.batch);
    for (auto& r : rows) r = std::size_t(rng.uniform_int(0, std::int64_t(train_data.rows()) - 1));
    GradientTape tape;
    const BoundParameters bound = BoundParameters::as_leaves(tape, params);
    const Var x = tape.constant(gather_rows(train_data, rows));
    const Var rec = codec.decode_bound(bound, codec.encode_bound(bound, x));
    const Var loss = ops::mean(ops::square(ops::sub(rec, x)));
    const float value = tape.value(loss)[0];
    if (!std::isfinite(value)) throw TrainingDivergedError(step, "codec training diverged");
    std::vector<Tensor> grads = tape.gradients(loss, bound.vars().first(trainable));
    std::vector<Tensor*> ptrs;
    for (std::size_t k = 0; k < trainable; ++k) ptrs.push_back(&params[k]);
    const double progress = double(step) / double(train.steps);
    adam.set_learning_rate(float(train.learning_rate * (0.1 + 0.45 * (1.0 + std::cos(3.14159265358979 * progress)))));
    adam.step(std::span<Tensor* const>(ptrs), grads);
    result.loss_curve.push_back(value);
  }

  // Standardisation is an invertible affine map between encoder and decoder, so fitting it
  // afterwards leaves reconstructions unchanged.
  codec.fit_standardization(train_data);
  result.validation_mse = reconstruction_mse(codec, val_data);
  result.met_threshold = result.validation_mse < train.threshold;
  result.codec = std::move(codec);
  return result;
}

}  // namespace advdm
