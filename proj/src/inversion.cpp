// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/inversion.hpp"

#include <cmath>

#include "advdm/errors.hpp"

namespace advdm {

std::string_view to_string(EmbeddingProvenance p) {
  return p == EmbeddingProvenance::class_table ? "class_table" : "inverted";
}

EmbeddingProvenance parse_provenance(std::string_view name) {
  if (name == "class_table") return EmbeddingProvenance::class_table;
  if (name == "inverted") return EmbeddingProvenance::inverted;
  throw FormatError("unknown embedding provenance '" + std::string(name) + "'");
}

void InversionConfig::validate() const {
  if (group_size < 1) throw ConfigError("inversion group size must be at least one");
  if (draws_per_image < 1) throw ConfigError("inversion needs at least one draw per image");
  if (!(step_length > 0.0f)) throw ConfigError("inversion step length must be positive");
}

InversionResult invert(const Denoiser& model, const DiffusionSchedule& sched, const Tensor& group,
                       const InversionConfig& config, RngStream& rng) {
  config.validate();
  require_rank2(group, "invert");
  if (group.rows() == 0) throw PreconditionError("invert: empty image group");
  if (group.cols() != model.data_dim()) throw DimensionError("invert: group does not match the denoiser's data space");

  const auto start_class = int(rng.uniform_int(0, std::int64_t(model.config().num_classes) - 1));
  Tensor s_star = model.class_embedding(start_class);
  const Tensor jitter = gaussian(rng, s_star.shape());
  for (std::size_t i = 0; i < s_star.size(); ++i) s_star[i] += config.init_noise * jitter[i];

  InversionResult result;
  result.loss_curve.reserve(config.steps);
  Adam adam(AdamConfig{config.step_length});
  const std::size_t rows = group.rows() * config.draws_per_image;
  std::vector<std::size_t> repeat(rows);
  for (std::size_t i = 0; i < rows; ++i) repeat[i] = i % group.rows();
  const Tensor batch = gather_rows(group, repeat);

  for (std::size_t step = 0; step < config.steps; ++step) {
    const std::vector<int> t = draw_steps(rng, rows, sched.steps());
    Tensor eps = gaussian(rng, batch.shape());
    GradientTape tape;
    const Var cond = tape.leaf(s_star);
    const Var loss = diffusion_loss(tape, model, tape.constant(batch), cond, t, tape.constant(std::move(eps)), sched);
    const float value = tape.value(loss)[0];
    if (!std::isfinite(value)) throw NumericError(step + 1, "inversion loss is not finite");
    Tensor g = tape.grad_wrt(loss, cond);
    Tensor* target[] = {&s_star};
    adam.step(std::span<Tensor* const>(target), std::span<const Tensor>(&g, 1));
    result.loss_curve.push_back(value);
  }

  if (config.steps > 0) {
    const std::size_t tail = std::max<std::size_t>(1, config.steps / 10);
    double acc = 0.0;
    for (std::size_t i = config.steps - tail; i < config.steps; ++i) acc += result.loss_curve[i];
    result.final_loss = acc / double(tail);
  }
  result.embedding = ConditionEmbedding{std::move(s_star), EmbeddingProvenance::inverted, -1};
  return result;
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw DimensionError("cosine_similarity: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * b[i];
    aa += double(a[i]) * a[i];
    bb += double(b[i]) * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

int nearest_class(const Denoiser& model, const Tensor& embedding) {
  int best = 0;
  double best_sim = -2.0;
  for (std::size_t k = 0; k < model.config().num_classes; ++k) {
    const double s = cosine_similarity(embedding, model.class_embedding(int(k)));
    if (s > best_sim) {
      best_sim = s;
      best = int(k);
    }
  }
  return best;
}

Tensor generate_from_inversion(const NoisePredictor& model, const DiffusionSchedule& sched,
                               const ConditionEmbedding& s_star, std::size_t count, RngStream& rng) {
  return sample(model, sched, s_star.vector, rng, count);
}

Tensor style_transfer(const NoisePredictor& model, const DiffusionSchedule& sched, const ConditionEmbedding& s_star,
                      const Tensor& source, double strength, RngStream& rng) {
  return img2img(model, sched, s_star.vector, source, strength, rng);
}

}  // namespace advdm
