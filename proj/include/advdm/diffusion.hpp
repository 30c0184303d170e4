// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "advdm/autodiff.hpp"
#include "advdm/nn.hpp"
#include "advdm/rng.hpp"

namespace advdm {

/// Variance schedule of the forward Markov chain. Steps are 1-based: t in [1, T].
class DiffusionSchedule {
 public:
  static DiffusionSchedule linear(std::size_t steps = 100, double beta_start = 1e-4, double beta_end = 0.02);
  /// Schedule from explicit per-step betas (each in (0, 1)).
  static DiffusionSchedule from_betas(std::vector<double> betas);

  std::size_t steps() const noexcept { return beta_.size(); }
  double beta(std::size_t t) const { return beta_[index(t)]; }
  double alpha(std::size_t t) const { return 1.0 - beta_[index(t)]; }
  double alpha_bar(std::size_t t) const { return alpha_bar_[index(t)]; }

  void check_step(std::size_t t) const;

  double beta_start() const noexcept { return beta_.front(); }
  double beta_end() const noexcept { return beta_.back(); }

 private:
  std::size_t index(std::size_t t) const;

  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

/// Anything that predicts the noise component of x_t. Implemented by Denoiser and by test stubs.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual std::size_t data_dim() const = 0;
  virtual std::size_t cond_dim() const = 0;
  /// eps_theta(x_t, t, c) for a batch; `cond` has one row per input row.
  virtual Var predict(GradientTape& tape, Var x_t, std::span<const int> steps, Var cond) const = 0;
};

struct DenoiserConfig {
  std::size_t data_dim = 2;
  std::size_t cond_dim = 8;
  std::size_t time_dim = 16;
  std::size_t hidden = 128;
  std::size_t depth = 3;
  std::size_t num_classes = 2;
};

/// Sinusoidal embedding of integer timesteps, [steps.size(), dim].
Tensor time_embedding(std::span<const int> steps, std::size_t dim);

/// Epsilon-prediction MLP over [x_t, time embedding, condition], with a learned class-condition table.
class Denoiser : public NoisePredictor {
 public:
  Denoiser(const DenoiserConfig& config, RngStream& init);
  static Denoiser from_parameters(const DenoiserConfig& config, ParameterSet params);

  const DenoiserConfig& config() const noexcept { return config_; }
  const ParameterSet& parameters() const noexcept { return params_; }
  ParameterSet& parameters() noexcept { return params_; }

  std::size_t data_dim() const override { return config_.data_dim; }
  std::size_t cond_dim() const override { return config_.cond_dim; }
  Var predict(GradientTape& tape, Var x_t, std::span<const int> steps, Var cond) const override;
  Var predict_bound(const BoundParameters& bound, GradientTape& tape, Var x_t, std::span<const int> steps,
                    Var cond) const;

  std::size_t class_table_index() const noexcept { return table_index_; }
  /// Class-table row, [1, cond_dim].
  Tensor class_embedding(int label) const;
  /// The unconditional ("null") condition: all zeros.
  Tensor null_condition(std::size_t count = 1) const { return Tensor({count, config_.cond_dim}, 0.0f); }

 private:
  Denoiser() = default;

  DenoiserConfig config_;
  ParameterSet params_;
  Mlp net_;
  std::size_t table_index_ = 0;
};

/// Denoiser view whose parameters are already on a tape (training).
class BoundDenoiser : public NoisePredictor {
 public:
  BoundDenoiser(const Denoiser& model, const BoundParameters& bound) : model_(model), bound_(bound) {}
  std::size_t data_dim() const override { return model_.data_dim(); }
  std::size_t cond_dim() const override { return model_.cond_dim(); }
  Var predict(GradientTape& tape, Var x_t, std::span<const int> steps, Var cond) const override {
    return model_.predict_bound(bound_, tape, x_t, steps, cond);
  }

 private:
  const Denoiser& model_;
  const BoundParameters& bound_;
};

/// sqrt(alpha_bar) * x0 + sqrt(1 - alpha_bar) * eps.
Tensor forward_diffuse(const Tensor& x0, double alpha_bar, const Tensor& eps);
Tensor forward_diffuse(const Tensor& x0, std::size_t t, const Tensor& eps, const DiffusionSchedule& sched);
/// Per-row timesteps; differentiable with respect to x0 and eps.
Var forward_diffuse(GradientTape& tape, Var x0, std::span<const int> steps, Var eps, const DiffusionSchedule& sched);

/// Repeats a single-row condition to `rows`; passes a full batch through.
Var expand_condition(Var cond, std::size_t rows);

/// Noise-matching loss: mean over rows of ||eps - eps_theta(x_t, t, c)||^2.
Var diffusion_loss(GradientTape& tape, const NoisePredictor& model, Var x0, Var cond, std::span<const int> steps,
                   Var eps, const DiffusionSchedule& sched);

/// Scalar l_dm for a single timestep shared by every row.
float l_dm(const NoisePredictor& model, const Tensor& x0, const Tensor& cond, std::size_t t, const Tensor& eps,
           const DiffusionSchedule& sched);

/// One Monte-Carlo term of the training loss.
struct DiffusionLossSample {
  std::vector<int> t;
  Tensor eps;
  Tensor x_t;
  float loss = 0.0f;
};

std::vector<int> draw_steps(RngStream& rng, std::size_t count, std::size_t steps);
DiffusionLossSample draw_loss_sample(const NoisePredictor& model, const DiffusionSchedule& sched, const Tensor& x0,
                                     const Tensor& cond, RngStream& rng);
/// Mean l_dm over `draws` fresh (t, eps) samples per row.
double expected_loss(const NoisePredictor& model, const DiffusionSchedule& sched, const Tensor& x0,
                     const Tensor& cond, RngStream& rng, std::size_t draws);

struct DiffusionTrainConfig {
  std::size_t steps = 4000;
  std::size_t batch = 128;
  float learning_rate = 2e-3f;
  /// Probability of replacing the class condition with the null condition.
  float uncond_prob = 0.2f;
  /// Exponential moving average of the weights; 0 disables.
  float ema_decay = 0.995f;
  /// Optional bound on the mean loss over the final 10% of steps.
  std::optional<float> loss_threshold;
};

struct DiffusionTrainResult {
  Denoiser model;
  std::vector<float> loss_curve;
  double final_loss = 0.0;
  bool met_threshold = true;
};

/// Trains `model` on rows of `data` with class `labels`.
DiffusionTrainResult train_denoiser(Denoiser model, const Tensor& data, std::span<const int> labels,
                                    const DiffusionSchedule& sched, const DiffusionTrainConfig& config, RngStream& rng);

/// Reverse chain from step `from` (x given at that step) down to x_0.
Tensor denoise_from(const NoisePredictor& model, const DiffusionSchedule& sched, Tensor x, std::size_t from,
                    const Tensor& cond, RngStream& rng);

/// Ancestral sampling of `count` rows starting from x_T ~ N(0, I).
Tensor sample(const NoisePredictor& model, const DiffusionSchedule& sched, const Tensor& cond, RngStream& rng,
              std::size_t count);

/// Step reached by a given img2img strength: round(strength * T), at least 1.
std::size_t strength_to_step(double strength, const DiffusionSchedule& sched);

/// Diffuse `source` to round(strength * T) and denoise it back under `cond`.
Tensor img2img(const NoisePredictor& model, const DiffusionSchedule& sched, const Tensor& cond, const Tensor& source,
               double strength, RngStream& rng);

/// Model-based purification: diffuse to t_star, then run the unconditional reverse chain.
Tensor diffpure(const NoisePredictor& model, const DiffusionSchedule& sched, const Tensor& x, std::size_t t_star,
                RngStream& rng);

}  // namespace advdm
