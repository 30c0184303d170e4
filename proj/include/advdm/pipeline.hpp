// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "advdm/attacks.hpp"
#include "advdm/checkpoint.hpp"
#include "advdm/config.hpp"

namespace advdm {

/// Wall-clock seconds per named stage. Never part of any compared hash.
struct StageTimings {
  std::vector<std::pair<std::string, double>> entries;
  void add(std::string stage, double seconds) { entries.emplace_back(std::move(stage), seconds); }
};

struct TrainedModels {
  Dataset data;
  std::optional<LatentCodec> codec;
  std::optional<Denoiser> model;
  DiffusionSchedule schedule;
  std::optional<Classifier> classifier;
  std::map<std::string, std::string> checkpoint_hashes;  ///< name -> SHA-256 of the encoded checkpoint

  const Denoiser& denoiser() const { return *model; }
  /// Codec encode, or identity when diffusion runs on the input space.
  Tensor to_model_space(const Tensor& x) const;
  Tensor from_model_space(const Tensor& z) const;
  FeatureBatch features(const Tensor& x, FeatureSource source, FeatureMode mode) const;
  std::optional<std::pair<float, float>> data_range() const;
};

/// Loads each checkpoint named in the config, training (and saving) the missing ones when allowed.
/// The classifier is only prepared when `need_classifier` is set.
TrainedModels prepare_models(const ExperimentConfig& config, bool need_classifier, StageTimings* timings = nullptr);

LatentCodec obtain_codec(const ExperimentConfig& config, const Dataset& data, std::string* hash,
                         StageTimings* timings = nullptr);
Denoiser obtain_denoiser(const ExperimentConfig& config, const Dataset& data, const LatentCodec* codec,
                         std::string* hash, StageTimings* timings = nullptr);
Classifier obtain_classifier(const ExperimentConfig& config, const Dataset& data, std::string* hash,
                             StageTimings* timings = nullptr);

std::filesystem::path checkpoint_path(const ExperimentConfig& config, const std::string& name);
DiffusionSchedule schedule_of(const ExperimentConfig& config);
DenoiserConfig denoiser_config_of(const ExperimentConfig& config, const Dataset& data);

/// Runs one attack on x0; x0 rows are input-space images or points.
Tensor run_attack(const TrainedModels& models, const AttackSpec& spec, const Tensor& x0, std::span<const int> labels,
                  RngStream& rng, AttackTrace* trace = nullptr);

/// Input-space rows of group `g` for a given pipeline seed, and the group's class.
struct ImageGroup {
  int label = 0;
  std::vector<std::size_t> rows;
};
ImageGroup select_group(const Dataset& data, std::size_t group, std::size_t group_size, std::uint64_t seed);

struct CellKey {
  std::size_t attack = 0;
  std::size_t defense = 0;
  std::uint64_t seed = 0;
};

struct CellResult {
  ScenarioKind scenario = ScenarioKind::text2img_inversion;
  AttackSpec attack;
  DefenseConfig defense;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;

  MetricReport report;  ///< mean over groups (counts and k from the first group)
  std::vector<MetricReport> per_group;
  BudgetReport budget;  ///< aggregated over every adversarial output of the cell
  std::vector<Tensor> clean_groups;
  std::vector<Tensor> adversarial_groups;
  double attack_seconds_per_example = 0.0;
  std::string outputs_hash;  ///< SHA-256 over adversarial, defended and generated tensors
};

struct CellOptions {
  bool keep_tensors = false;
};

CellResult run_cell(const TrainedModels& models, const ScenarioSection& scenario, const AttackSpec& attack,
                    const DefenseConfig& defense, std::uint64_t seed, const CellOptions& options = {});

/// Clean, undefended-adversarial and defended-adversarial reports under one seed.
struct DefenseEvaluation {
  MetricReport clean;
  MetricReport undefended;
  MetricReport defended;
};

DefenseEvaluation defend_then_evaluate(const TrainedModels& models, const ScenarioSection& scenario,
                                       const AttackSpec& attack, const DefenseConfig& defense, std::uint64_t seed);

struct RunManifest {
  std::string config_hash;
  std::map<std::string, std::string> checkpoint_hashes;
  std::map<std::string, std::string> artifact_hashes;  ///< file name -> SHA-256
  std::vector<std::pair<std::string, std::string>> cell_hashes;
  StageTimings timings;

  nlohmann::json to_json() const;
  /// Hash-bearing fields only; timings are excluded.
  bool same_hashes(const RunManifest& other) const;
};

struct RunResult {
  std::vector<CellResult> cells;
  RunManifest manifest;
  bool all_ok() const;
};

/// Runs every (attack, defense, seed) cell; a failing cell is logged and the remaining cells still run.
/// Writes metrics.csv, its schema, plot data and manifest.json under config.output_dir.
RunResult run_scenario(const ExperimentConfig& config, const TrainedModels& models,
                       const std::function<void(const CellResult&)>& on_cell = {});

std::string config_hash(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// CSV emission

struct MetricRow {
  std::string scenario;
  std::string attack;
  double epsilon = 0.0;
  std::size_t n_steps = 0;
  std::string defense;
  std::uint64_t seed = 0;
  double fid = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t n_real = 0;
  std::size_t n_gen = 0;
  std::size_t k = 0;
  double max_deviation = 0.0;
  bool budget_ok = true;
};

MetricRow to_row(const CellResult& cell);
void write_metric_csv(std::ostream& out, std::span<const MetricRow> rows);
std::vector<MetricRow> parse_metric_csv(std::istream& in);
nlohmann::json metric_csv_schema();

struct PlotFilter {
  std::string attack = "advdm";
  std::string defense = "none";
};

/// File name -> CSV text for fid_vs_n, precision_vs_n and fid_vs_eps, plus plot_data.schema.json.
std::map<std::string, std::string> plot_data(std::span<const MetricRow> rows, const PlotFilter& filter = {});
/// Writes plot_data() into `dir` and returns file name -> SHA-256.
std::map<std::string, std::string> emit_plot_data(std::span<const MetricRow> rows, const std::filesystem::path& dir,
                                                  const PlotFilter& filter = {});

/// Writes through a temporary file and rename so a crash never leaves a partial artifact.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace advdm
