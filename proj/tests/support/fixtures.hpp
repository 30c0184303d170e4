// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "advdm/pipeline.hpp"

namespace advdm::testing {

inline std::filesystem::path fixture_dir() { return ADVDM_FIXTURE_DIR; }

/// 16x16 shapes, latent diffusion; trained once and cached as checkpoints under the build tree.
inline ExperimentConfig shapes_config() {
  ExperimentConfig c;
  c.output_dir = fixture_dir() / "shapes";
  return c;
}

inline const TrainedModels& shapes_models() {
  static const TrainedModels models = prepare_models(shapes_config(), true);
  return models;
}

/// Two-component 2-D Gaussian mixture, diffusion directly on the points.
inline ExperimentConfig mixture_config() {
  ExperimentConfig c;
  c.dataset.kind = DatasetKind::gaussian_mixture_2d;
  c.dataset.classes = 2;
  c.dataset.per_class = 512;
  c.dataset.stddev = 0.02;
  c.dataset.radius = 2.0;
  c.codec.enabled = false;
  c.output_dir = fixture_dir() / "mixture";
  return c;
}

inline const TrainedModels& mixture_models() {
  static const TrainedModels models = prepare_models(mixture_config(), false);
  return models;
}

}  // namespace advdm::testing
