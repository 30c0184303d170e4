// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/diffusion.hpp"

#include <cmath>
#include <numbers>

#include "advdm/errors.hpp"

namespace advdm {

// ---------------------------------------------------------------------------
// Schedule

DiffusionSchedule DiffusionSchedule::linear(std::size_t steps, double beta_start, double beta_end) {
  if (steps == 0) throw ConfigError("diffusion schedule needs at least one step");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end) {
    throw ConfigError("linear schedule requires 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    betas[i] = steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * double(i) / double(steps - 1);
  }
  return from_betas(std::move(betas));
}

DiffusionSchedule DiffusionSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw ConfigError("diffusion schedule needs at least one step");
  DiffusionSchedule s;
  s.alpha_bar_.reserve(betas.size());
  double prod = 1.0;
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("every beta must lie in (0, 1)");
    prod *= 1.0 - b;
    s.alpha_bar_.push_back(prod);
  }
  s.beta_ = std::move(betas);
  return s;
}

void DiffusionSchedule::check_step(std::size_t t) const {
  if (t < 1 || t > beta_.size()) {
    throw StepError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(beta_.size()) + "]");
  }
}

std::size_t DiffusionSchedule::index(std::size_t t) const {
  check_step(t);
  return t - 1;
}

// ---------------------------------------------------------------------------
// Denoiser

Tensor time_embedding(std::span<const int> steps, std::size_t dim) {
  Tensor out({steps.size(), dim});
  const std::size_t half = dim / 2;
  for (std::size_t r = 0; r < steps.size(); ++r) {
    for (std::size_t i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * double(i) / double(half));
      const double arg = double(steps[r]) * freq;
      out[r * dim + i] = float(std::sin(arg));
      out[r * dim + half + i] = float(std::cos(arg));
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> denoiser_widths(const DenoiserConfig& c) {
  std::vector<std::size_t> w{c.data_dim + c.time_dim + c.cond_dim};
  for (std::size_t i = 0; i < c.depth; ++i) w.push_back(c.hidden);
  w.push_back(c.data_dim);
  return w;
}

void validate(const DenoiserConfig& c) {
  if (c.data_dim == 0 || c.hidden == 0 || c.depth == 0 || c.num_classes == 0 || c.time_dim % 2 != 0) {
    throw ConfigError("invalid denoiser configuration");
  }
}

}  // namespace

Denoiser::Denoiser(const DenoiserConfig& config, RngStream& init) : config_(config) {
  validate(config_);
  net_ = Mlp(denoiser_widths(config_), Activation::silu, Activation::identity, params_, "eps", init);
  table_index_ = params_.add("class_table", gaussian(init, {config_.num_classes, config_.cond_dim}));
}

Denoiser Denoiser::from_parameters(const DenoiserConfig& config, ParameterSet params) {
  validate(config);
  Denoiser d;
  d.config_ = config;
  d.params_ = std::move(params);
  d.net_ = Mlp::attach(denoiser_widths(config), Activation::silu, Activation::identity, d.params_, "eps");
  d.table_index_ = d.params_.index_of("class_table");
  if (d.params_[d.table_index_].shape() != Shape{config.num_classes, config.cond_dim}) {
    throw FormatError("class_table has an unexpected shape");
  }
  return d;
}

Var Denoiser::predict(GradientTape& tape, Var x_t, std::span<const int> steps, Var cond) const {
  const BoundParameters bound = BoundParameters::as_constants(tape, params_);
  return predict_bound(bound, tape, x_t, steps, cond);
}

Var Denoiser::predict_bound(const BoundParameters& bound, GradientTape& tape, Var x_t, std::span<const int> steps,
                            Var cond) const {
  const Tensor& xv = tape.value(x_t);
  require_rank2(xv, "Denoiser::predict");
  if (xv.cols() != config_.data_dim) {
    throw DimensionError("denoiser expects " + std::to_string(config_.data_dim) + " features, got " +
                         std::to_string(xv.cols()));
  }
  if (steps.size() != xv.rows()) throw DimensionError("denoiser needs one timestep per row");
  const Var c = expand_condition(cond, xv.rows());
  if (tape.value(c).cols() != config_.cond_dim) throw DimensionError("condition width differs from cond_dim");
  const Var temb = tape.constant(time_embedding(steps, config_.time_dim));
  return net_.forward(bound, ops::concat_cols({x_t, temb, c}));
}

Tensor Denoiser::class_embedding(int label) const {
  if (label < 0 || std::size_t(label) >= config_.num_classes) throw PreconditionError("class label out of range");
  const std::size_t row[] = {std::size_t(label)};
  return advdm::gather_rows(params_[table_index_], row);
}

// ---------------------------------------------------------------------------
// Forward process and loss

Tensor forward_diffuse(const Tensor& x0, double alpha_bar, const Tensor& eps) {
  require_same_shape(x0, eps, "forward_diffuse");
  const float a = float(std::sqrt(alpha_bar));
  const float b = float(std::sqrt(1.0 - alpha_bar));
  Tensor out(x0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return out;
}

Tensor forward_diffuse(const Tensor& x0, std::size_t t, const Tensor& eps, const DiffusionSchedule& sched) {
  return forward_diffuse(x0, sched.alpha_bar(t), eps);
}

Var forward_diffuse(GradientTape& tape, Var x0, std::span<const int> steps, Var eps, const DiffusionSchedule& sched) {
  const std::size_t n = tape.value(x0).rows();
  if (steps.size() != n) throw DimensionError("forward_diffuse: one timestep per row required");
  require_same_shape(tape.value(x0), tape.value(eps), "forward_diffuse");
  Tensor a({n, 1}), b({n, 1});
  for (std::size_t r = 0; r < n; ++r) {
    const double ab = sched.alpha_bar(std::size_t(steps[r]));
    a[r] = float(std::sqrt(ab));
    b[r] = float(std::sqrt(1.0 - ab));
  }
  return ops::add(ops::scale_rows(x0, tape.constant(std::move(a))), ops::scale_rows(eps, tape.constant(std::move(b))));
}

Var expand_condition(Var cond, std::size_t rows) {
  const Tensor& cv = cond.tape->value(cond);
  if (cv.rows() == rows) return cond;
  if (cv.rows() == 1) return ops::broadcast_rows(cond, rows);
  throw DimensionError("condition batch does not match input batch");
}

Var diffusion_loss(GradientTape& tape, const NoisePredictor& model, Var x0, Var cond, std::span<const int> steps,
                   Var eps, const DiffusionSchedule& sched) {
  const Var x_t = forward_diffuse(tape, x0, steps, eps, sched);
  const Var pred = model.predict(tape, x_t, steps, cond);
  const Var per_row = ops::row_sum(ops::square(ops::sub(eps, pred)));
  return ops::mean(per_row);
}

float l_dm(const NoisePredictor& model, const Tensor& x0, const Tensor& cond, std::size_t t, const Tensor& eps,
           const DiffusionSchedule& sched) {
  sched.check_step(t);
  GradientTape tape;
  const std::vector<int> steps(x0.rows(), int(t));
  const Var loss = diffusion_loss(tape, model, tape.constant(x0), tape.constant(cond), steps, tape.constant(eps), sched);
  return tape.value(loss)[0];
}

std::vector<int> draw_steps(RngStream& rng, std::size_t count, std::size_t steps) {
  std::vector<int> t(count);
  for (auto& v : t) v = int(rng.uniform_int(1, std::int64_t(steps)));
  return t;
}

DiffusionLossSample draw_loss_sample(const NoisePredictor& model, const DiffusionSchedule& sched, const Tensor& x0,
                                     const Tensor& cond, RngStream& rng) {
  DiffusionLossSample s;
  s.t = draw_steps(rng, x0.rows(), sched.steps());
  s.eps = gaussian(rng, x0.shape());
  GradientTape tape;
  const Var eps = tape.constant(s.eps);
  const Var x_t = forward_diffuse(tape, tape.constant(x0), s.t, eps, sched);
  s.x_t = tape.value(x_t);
  const Var pred = model.predict(tape, x_t, s.t, tape.constant(cond));
  s.loss = tape.value(ops::mean(ops::row_sum(ops::square(ops::sub(eps, pred)))))[0];
  return s;
}

double expected_loss(const NoisePredictor& model, const DiffusionSchedule& sched, const Tensor& x0, const Tensor& cond,
                     RngStream& rng, std::size_t draws) {
  double acc = 0.0;
  for (std::size_t i = 0; i < draws; ++i) acc += draw_loss_sample(model, sched, x0, cond, rng).loss;
  return draws ? acc / double(draws) : 0.0;
}

// ---------------------------------------------------------------------------
// Training

DiffusionTrainResult train_denoiser(Denoiser model, const Tensor& data, std::span<const int> labels,
                                    const DiffusionSchedule& sched, const DiffusionTrainConfig& config,
                                    RngStream& rng) {
  require_rank2(data, "train_denoiser");
  if (data.rows() == 0) throw PreconditionError("train_denoiser: empty dataset");
  if (labels.size() != data.rows()) throw PreconditionError("train_denoiser: one label per example required");
  for (int l : labels) {
    if (l < 0 || std::size_t(l) >= model.config().num_classes) {
      throw PreconditionError("train_denoiser: label outside the condition table");
    }
  }
  if (config.batch == 0) throw ConfigError("train_denoiser: batch size must be positive");

  ParameterSet& params = model.parameters();
  ParameterSet ema = params;
  Adam adam(AdamConfig{config.learning_rate});
  DiffusionTrainResult result{model, {}, 0.0, true};
  result.loss_curve.reserve(config.steps);
  const std::size_t n = data.rows(), batch = config.batch;

  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<std::size_t> rows(batch), classes(batch);
    Tensor keep({batch, 1});
    for (std::size_t i = 0; i < batch; ++i) {
      rows[i] = std::size_t(rng.uniform_int(0, std::int64_t(n) - 1));
      classes[i] = std::size_t(labels[rows[i]]);
      keep[i] = rng.uniform() < config.uncond_prob ? 0.0f : 1.0f;
    }
    const std::vector<int> t = draw_steps(rng, batch, sched.steps());
    Tensor eps = gaussian(rng, {batch, data.cols()});

    GradientTape tape;
    const BoundParameters bound = BoundParameters::as_leaves(tape, params);
    const Var table = bound[model.class_table_index()];
    const Var cond = ops::scale_rows(ops::gather_rows(table, classes), tape.constant(std::move(keep)));
    const BoundDenoiser net(model, bound);
    const Var loss = diffusion_loss(tape, net, tape.constant(advdm::gather_rows(data, rows)), cond, t,
                                    tape.constant(std::move(eps)), sched);
    const float value = tape.value(loss)[0];
    if (!std::isfinite(value)) throw TrainingDivergedError(step, "denoiser training diverged");
    const std::vector<Tensor> grads = tape.gradients(loss, bound.vars());

    const double progress = double(step) / double(config.steps);
    adam.set_learning_rate(float(config.learning_rate * (0.1 + 0.45 * (1.0 + std::cos(std::numbers::pi * progress)))));
    adam.step(params, grads);
    if (config.ema_decay > 0.0f) {
      const float d = config.ema_decay;
      for (std::size_t k = 0; k < params.size(); ++k)
        for (std::size_t i = 0; i < params[k].size(); ++i) ema[k][i] = d * ema[k][i] + (1.0f - d) * params[k][i];
    }
    result.loss_curve.push_back(value);
  }

  if (config.ema_decay > 0.0f && config.steps > 0) params = ema;
  const std::size_t tail = std::max<std::size_t>(1, config.steps / 10);
  double acc = 0.0;
  for (std::size_t i = config.steps - std::min(tail, config.steps); i < config.steps; ++i) acc += result.loss_curve[i];
  result.final_loss = config.steps ? acc / double(std::min(tail, config.steps)) : 0.0;
  result.met_threshold = !config.loss_threshold || result.final_loss < *config.loss_threshold;
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Sampling

Tensor denoise_from(const NoisePredictor& model, const DiffusionSchedule& sched, Tensor x, std::size_t from,
                    const Tensor& cond, RngStream& rng) {
  if (from == 0) return x;
  sched.check_step(from);
  const std::size_t n = x.rows();
  if (n == 0) return x;
  for (std::size_t t = from; t >= 1; --t) {
    const std::vector<int> steps(n, int(t));
    Tensor eps_hat;
    {
      GradientTape tape;
      eps_hat = tape.value(model.predict(tape, tape.constant(x), steps, tape.constant(cond)));
    }
    const double alpha = sched.alpha(t);
    const float inv_sqrt_alpha = float(1.0 / std::sqrt(alpha));
    const float coef = float(sched.beta(t) / std::sqrt(1.0 - sched.alpha_bar(t)));
    const float sigma = float(std::sqrt(sched.beta(t)));
    Tensor z = t > 1 ? gaussian(rng, x.shape()) : Tensor(x.shape(), 0.0f);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = inv_sqrt_alpha * (x[i] - coef * eps_hat[i]) + sigma * z[i];
    if (t == 1) break;
  }
  return x;
}

Tensor sample(const NoisePredictor& model, const DiffusionSchedule& sched, const Tensor& cond, RngStream& rng,
              std::size_t count) {
  if (count == 0) return Tensor({0, model.data_dim()});
  Tensor x = gaussian(rng, {count, model.data_dim()});
  return denoise_from(model, sched, std::move(x), sched.steps(), cond, rng);
}

std::size_t strength_to_step(double strength, const DiffusionSchedule& sched) {
  if (!(strength > 0.0 && strength <= 1.0)) throw ConfigError("strength must lie in (0, 1]");
  const auto s = std::size_t(std::llround(strength * double(sched.steps())));
  return std::clamp<std::size_t>(s, 1, sched.steps());
}

Tensor img2img(const NoisePredictor& model, const DiffusionSchedule& sched, const Tensor& cond, const Tensor& source,
               double strength, RngStream& rng) {
  const std::size_t s = strength_to_step(strength, sched);
  const Tensor eps = gaussian(rng, source.shape());
  return denoise_from(model, sched, forward_diffuse(source, s, eps, sched), s, cond, rng);
}

Tensor diffpure(const NoisePredictor& model, const DiffusionSchedule& sched, const Tensor& x, std::size_t t_star,
                RngStream& rng) {
  sched.check_step(t_star);
  const Tensor eps = gaussian(rng, x.shape());
  const Tensor null_cond({1, model.cond_dim()}, 0.0f);
  return denoise_from(model, sched, forward_diffuse(x, t_star, eps, sched), t_star, null_cond, rng);
}

}  // namespace advdm
