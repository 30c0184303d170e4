// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "advdm/errors.hpp"

namespace advdm {

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0f) || !std::isfinite(epsilon)) throw ConfigError("attack epsilon must be non-negative");
  if (!(alpha > 0.0f)) throw ConfigError("attack alpha must be positive");
  if (n_steps < 1) throw ConfigError("attack needs at least one step");
  if (epsilon > 0.0f && alpha > epsilon) throw ConfigError("attack alpha must not exceed epsilon");
  if (draws_per_step < 1) throw ConfigError("draws_per_step must be at least one");
  if (data_range && !(data_range->first < data_range->second)) throw ConfigError("invalid data range");
}

// ---------------------------------------------------------------------------

PerturbationState::PerturbationState(Tensor x0, const AttackConfig& config)
    : x0_(std::move(x0)), x_(x0_), epsilon_(config.epsilon), range_(config.data_range) {}

void PerturbationState::project() {
  for (std::size_t i = 0; i < x_.size(); ++i) {
    float v = std::clamp(x_[i], x0_[i] - epsilon_, x0_[i] + epsilon_);
    if (range_) v = std::clamp(v, range_->first, range_->second);
    x_[i] = v;
  }
}

void PerturbationState::apply(const Tensor& delta) {
  require_same_shape(delta, x_, "PerturbationState::apply");
  for (std::size_t i = 0; i < x_.size(); ++i) x_[i] += delta[i];
  project();
  ++step_;
}

void PerturbationState::reset_to(const Tensor& candidate) {
  require_same_shape(candidate, x_, "PerturbationState::reset_to");
  x_ = candidate;
  project();
}

void AttackTrace::write_csv(std::ostream& out) const {
  out << "step,t,loss,max_delta\n";
  for (const auto& r : rows) {
    out << r.step << ',';
    for (std::size_t i = 0; i < r.t.size(); ++i) out << (i ? ";" : "") << r.t[i];
    out << ',' << r.loss << ',' << r.max_delta << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

Tensor scaled_sign(const Tensor& g, float alpha) {
  Tensor s = sign(g);
  for (auto& v : s.values()) v *= alpha;
  return s;
}

void check_finite(const Tensor& g, double loss, std::size_t step) {
  if (!std::isfinite(loss) || !all_finite(g)) throw NumericError(step, "non-finite attack gradient");
}

Tensor signed_ascent_dm(const NoisePredictor& model, const DiffusionSchedule& sched, const LatentCodec* codec,
                        const Tensor& x0, const Tensor& cond, const AttackConfig& config, RngStream& rng,
                        AttackTrace* trace, bool resample) {
  config.validate();
  require_rank2(x0, "diffusion attack input");
  if (config.mode == AttackMode::latent && codec == nullptr) throw ConfigError("latent-mode attack requires a codec");
  const std::size_t n = x0.rows();
  const std::size_t model_dim = config.mode == AttackMode::latent ? codec->latent_dim() : x0.cols();
  if (model_dim != model.data_dim()) throw DimensionError("attack input does not match the denoiser's data space");

  PerturbationState state(x0, config);
  std::vector<std::vector<int>> steps(config.draws_per_step);
  std::vector<Tensor> noise(config.draws_per_step);
  for (std::size_t i = 0; i < config.n_steps; ++i) {
    if (i == 0 || resample) {
      for (std::size_t d = 0; d < config.draws_per_step; ++d) {
        steps[d] = draw_steps(rng, n, sched.steps());
        noise[d] = gaussian(rng, {n, model_dim});
      }
    }
    Tensor grad(x0.shape(), 0.0f);
    double loss = 0.0;
    for (std::size_t d = 0; d < config.draws_per_step; ++d) {
      GradientTape tape;
      const Var x = tape.leaf(state.current());
      const Var z = config.mode == AttackMode::latent ? codec->encode(tape, x) : x;
      const Var l = diffusion_loss(tape, model, z, tape.constant(cond), steps[d], tape.constant(noise[d]), sched);
      loss += tape.value(l)[0];
      const Tensor g = tape.grad_wrt(l, x);
      if (config.draws_per_step == 1) {
        grad = g;
      } else {
        for (std::size_t k = 0; k < g.size(); ++k) grad[k] += g[k];
      }
    }
    loss /= double(config.draws_per_step);
    check_finite(grad, loss, i + 1);
    state.apply(scaled_sign(grad, config.alpha));
    if (trace) trace->rows.push_back({i + 1, steps.front(), loss, state.max_deviation()});
  }
  return state.current();
}

}  // namespace

Tensor advdm(const NoisePredictor& model, const DiffusionSchedule& sched, const LatentCodec* codec, const Tensor& x0,
             const Tensor& cond, const AttackConfig& config, RngStream& rng, AttackTrace* trace) {
  return signed_ascent_dm(model, sched, codec, x0, cond, config, rng, trace, true);
}

Tensor pgd_dm(const NoisePredictor& model, const DiffusionSchedule& sched, const LatentCodec* codec, const Tensor& x0,
              const Tensor& cond, const AttackConfig& config, RngStream& rng, AttackTrace* trace) {
  return signed_ascent_dm(model, sched, codec, x0, cond, config, rng, trace, false);
}

Var embedding_objective(GradientTape& tape, const LatentCodec& codec, Var x, const Tensor& z0) {
  const Var diff = ops::sub(codec.encode(tape, x), tape.constant(z0));
  // a tiny offset keeps the root differentiable at zero displacement
  const Var dist = ops::sqrt(ops::add_scalar(ops::row_sum(ops::square(diff)), kEmbeddingRootOffset));
  return ops::sum(dist);
}

Tensor embedding_attack(const LatentCodec& codec, const Tensor& x0, const AttackConfig& config, RngStream& rng,
                        AttackTrace* trace) {
  config.validate();
  require_rank2(x0, "embedding_attack input");
  const Tensor z0 = codec.encode(x0);
  PerturbationState state(x0, config);
  Tensor start = gaussian(rng, x0.shape());
  for (std::size_t i = 0; i < start.size(); ++i) start[i] = x0[i] + config.epsilon * start[i];
  state.reset_to(start);

  for (std::size_t i = 0; i < config.n_steps; ++i) {
    GradientTape tape;
    const Var x = tape.leaf(state.current());
    const Var objective = embedding_objective(tape, codec, x, z0);
    const double value = tape.value(objective)[0] / double(std::max<std::size_t>(x0.rows(), 1));
    const Tensor g = tape.grad_wrt(objective, x);
    check_finite(g, value, i + 1);
    state.apply(scaled_sign(g, config.alpha));
    if (trace) trace->rows.push_back({i + 1, {}, value, state.max_deviation()});
  }
  return state.current();
}

Tensor pgd_classifier(const Classifier& classifier, const Tensor& x0, std::span<const int> labels,
                      const AttackConfig& config, RngStream& rng, AttackTrace* trace) {
  config.validate();
  require_rank2(x0, "pgd_classifier input");
  if (labels.size() != x0.rows()) throw DimensionError("pgd_classifier: one label per row required");
  PerturbationState state(x0, config);
  Tensor start = uniform(rng, x0.shape(), -config.epsilon, config.epsilon);
  for (std::size_t i = 0; i < start.size(); ++i) start[i] += x0[i];
  state.reset_to(start);

  for (std::size_t i = 0; i < config.n_steps; ++i) {
    GradientTape tape;
    const Var x = tape.leaf(state.current());
    const Var loss = ops::cross_entropy(classifier.logits(tape, x), labels);
    const double value = tape.value(loss)[0];
    const Tensor g = tape.grad_wrt(loss, x);
    check_finite(g, value, i + 1);
    state.apply(scaled_sign(g, config.alpha));
    if (trace) trace->rows.push_back({i + 1, {}, value, state.max_deviation()});
  }
  return state.current();
}

BudgetReport verify_budget(const Tensor& x0, const Tensor& x_adv, float epsilon,
                           std::optional<std::pair<float, float>> range) {
  require_same_shape(x0, x_adv, "verify_budget");
  BudgetReport rep;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const float dev = std::fabs(x_adv[i] - x0[i]);
    if (dev > rep.max_deviation) {
      rep.max_deviation = dev;
      rep.max_index = i;
    }
    if (dev > epsilon + kBudgetTolerance) {
      ++rep.budget_violations;
      if (!rep.first_budget_violation) rep.first_budget_violation = i;
    }
    if (range && (!(x_adv[i] >= range->first) || !(x_adv[i] <= range->second))) {
      ++rep.range_violations;
      if (!rep.first_range_violation) rep.first_range_violation = i;
    }
  }
  rep.pass = rep.budget_violations == 0 && rep.range_violations == 0;
  return rep;
}

}  // namespace advdm
