// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advdm/classifier.hpp"
#include "advdm/codec.hpp"
#include "advdm/diffusion.hpp"

namespace advdm {

enum class AttackMode { pixel, latent };

/// Tolerance used when checking float results against the L-infinity budget.
inline constexpr float kBudgetTolerance = 1e-6f;

struct AttackConfig {
  float epsilon = 8.0f / 255.0f;
  float alpha = 1.0f / 255.0f;
  std::size_t n_steps = 40;
  AttackMode mode = AttackMode::latent;
  /// Valid data range; nullopt for unconstrained (point) data.
  std::optional<std::pair<float, float>> data_range = std::make_pair(0.0f, 1.0f);
  /// Monte-Carlo draws averaged per gradient step. 1 reproduces the single-sample estimator.
  std::size_t draws_per_step = 1;

  /// Throws ConfigError. epsilon = 0 is accepted as the empty budget.
  void validate() const;
};

/// Current adversarial candidate together with the clean input it must stay close to.
class PerturbationState {
 public:
  PerturbationState(Tensor x0, const AttackConfig& config);

  const Tensor& original() const noexcept { return x0_; }
  const Tensor& current() const noexcept { return x_; }
  std::size_t step_index() const noexcept { return step_; }

  /// x <- clamp_range(clip_{eps, x0}(x + delta)); advances the step index.
  void apply(const Tensor& delta);
  /// Replaces the candidate with the projection of `candidate` (no step increment).
  void reset_to(const Tensor& candidate);
  float max_deviation() const { return max_abs_diff(x_, x0_); }

 private:
  void project();

  Tensor x0_;
  Tensor x_;
  float epsilon_;
  std::optional<std::pair<float, float>> range_;
  std::size_t step_ = 0;
};

struct AttackTraceRow {
  std::size_t step = 0;
  std::vector<int> t;  ///< timestep per row; empty for attacks that draw none
  double loss = 0.0;   ///< objective at the iterate the gradient was taken from
  float max_delta = 0.0f;
};

struct AttackTrace {
  std::vector<AttackTraceRow> rows;
  void write_csv(std::ostream& out) const;
};

/// Monte-Carlo signed gradient ascent on the diffusion loss: a fresh (t, eps) each iteration.
/// In latent mode the loss is evaluated on codec->encode(x) and differentiated back to x.
Tensor advdm(const NoisePredictor& model, const DiffusionSchedule& sched, const LatentCodec* codec, const Tensor& x0,
             const Tensor& cond, const AttackConfig& config, RngStream& rng, AttackTrace* trace = nullptr);

/// PGD on the diffusion loss with a single (t, eps) draw held fixed for every iteration.
Tensor pgd_dm(const NoisePredictor& model, const DiffusionSchedule& sched, const LatentCodec* codec, const Tensor& x0,
              const Tensor& cond, const AttackConfig& config, RngStream& rng, AttackTrace* trace = nullptr);

inline constexpr float kEmbeddingRootOffset = 1e-12f;

/// Sum over rows of sqrt(||E(x) - z0||^2 + kEmbeddingRootOffset).
Var embedding_objective(GradientTape& tape, const LatentCodec& codec, Var x, const Tensor& z0);

/// Maximises ||E(x) - E(x0)||_2 from a random start x0 + eps * z.
Tensor embedding_attack(const LatentCodec& codec, const Tensor& x0, const AttackConfig& config, RngStream& rng,
                        AttackTrace* trace = nullptr);

/// PGD on the classifier's cross-entropy for the true labels, from a uniform random start.
Tensor pgd_classifier(const Classifier& classifier, const Tensor& x0, std::span<const int> labels,
                      const AttackConfig& config, RngStream& rng, AttackTrace* trace = nullptr);

struct BudgetReport {
  bool pass = true;
  float max_deviation = 0.0f;
  std::size_t max_index = 0;
  std::size_t budget_violations = 0;
  std::size_t range_violations = 0;
  std::optional<std::size_t> first_budget_violation;
  std::optional<std::size_t> first_range_violation;
};

BudgetReport verify_budget(const Tensor& x0, const Tensor& x_adv, float epsilon,
                           std::optional<std::pair<float, float>> range = std::make_pair(0.0f, 1.0f));

}  // namespace advdm
