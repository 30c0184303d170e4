// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "advdm/attacks.hpp"
#include "advdm/classifier.hpp"
#include "advdm/codec.hpp"
#include "advdm/dataset.hpp"
#include "advdm/defenses.hpp"
#include "advdm/diffusion.hpp"
#include "advdm/inversion.hpp"
#include "advdm/metrics.hpp"

namespace advdm {

enum class AttackKind { none, advdm, pgd_dm, embedding, pgd_classifier };
AttackKind parse_attack_kind(std::string_view name);
std::string_view to_string(AttackKind kind);

enum class ScenarioKind { text2img_inversion, style_transfer, img2img };
ScenarioKind parse_scenario_kind(std::string_view name);
std::string_view to_string(ScenarioKind kind);

struct AttackSpec {
  AttackKind kind = AttackKind::none;
  AttackConfig config;
  std::string label() const;  ///< e.g. "advdm:eps=8/255:n=40"
};

struct CodecSection {
  bool enabled = true;  ///< false: diffusion runs directly on the input space
  CodecConfig model;
  CodecTrainConfig train;
};

struct DiffusionSection {
  std::size_t steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  DenoiserConfig model;  ///< data_dim and num_classes are filled in from the dataset and codec
  DiffusionTrainConfig train;
};

struct ClassifierSection {
  ClassifierConfig model;
  ClassifierTrainConfig train;
};

struct ScenarioSection {
  ScenarioKind kind = ScenarioKind::text2img_inversion;
  std::size_t groups = 10;
  std::size_t samples_per_group = 50;
  double strength = kDefaultStyleStrength;
  InversionConfig inversion;
  std::size_t neighbors = kDefaultNeighbors;
  FeatureMode features = FeatureMode::encoder;
};

struct CheckpointPaths {
  std::filesystem::path codec;
  std::filesystem::path diffusion;
  std::filesystem::path classifier;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  CodecSection codec;
  DiffusionSection diffusion;
  ClassifierSection classifier;
  std::vector<AttackSpec> attacks{AttackSpec{}};
  std::vector<DefenseConfig> defenses{DefenseConfig{}};
  ScenarioSection scenario;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t model_seed = 1;
  std::filesystem::path output_dir = "runs/default";
  CheckpointPaths checkpoints;
  bool train_if_missing = true;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

/// Parses a budget given either as a number or as a "a/b" fraction string.
float parse_budget(const nlohmann::json& value, std::string_view field);

/// Unknown keys and ill-typed values raise ConfigError naming the offending path.
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace advdm
