// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>
#include <vector>

#include "advdm/diffusion.hpp"

namespace advdm {

enum class EmbeddingProvenance { class_table, inverted };

std::string_view to_string(EmbeddingProvenance p);
EmbeddingProvenance parse_provenance(std::string_view name);

/// Condition vector fed to the denoiser: a class-table row or an optimised pseudo-word.
struct ConditionEmbedding {
  Tensor vector;  ///< [1, cond_dim]
  EmbeddingProvenance provenance = EmbeddingProvenance::inverted;
  int source_class = -1;  ///< class-table row, or -1 when unknown
};

struct InversionConfig {
  std::size_t steps = 1000;
  float step_length = 0.02f;
  std::size_t group_size = 5;
  /// (t, eps) draws per group image per optimisation step.
  std::size_t draws_per_image = 4;
  /// Standard deviation of the noise added to the initial class-table row.
  float init_noise = 0.1f;

  void validate() const;
};

struct InversionResult {
  ConditionEmbedding embedding;
  std::vector<float> loss_curve;
  /// Mean loss over the final 10% of steps (0 when steps = 0).
  double final_loss = 0.0;
};

/// Optimises a condition embedding so the frozen denoiser reconstructs `group` (rows in the
/// denoiser's data space). Only the embedding receives updates.
InversionResult invert(const Denoiser& model, const DiffusionSchedule& sched, const Tensor& group,
                       const InversionConfig& config, RngStream& rng);

/// Class-table row with the highest cosine similarity to `embedding`.
int nearest_class(const Denoiser& model, const Tensor& embedding);
double cosine_similarity(const Tensor& a, const Tensor& b);

/// Conditional ancestral samples from an inverted embedding.
Tensor generate_from_inversion(const NoisePredictor& model, const DiffusionSchedule& sched,
                               const ConditionEmbedding& s_star, std::size_t count, RngStream& rng);

/// img2img from `source` conditioned on the inverted style embedding.
Tensor style_transfer(const NoisePredictor& model, const DiffusionSchedule& sched, const ConditionEmbedding& s_star,
                      const Tensor& source, double strength, RngStream& rng);

inline constexpr double kDefaultStyleStrength = 0.5;

}  // namespace advdm
