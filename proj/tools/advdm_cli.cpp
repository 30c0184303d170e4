// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: training, single-stage tools and full sweeps.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "advdm/errors.hpp"
#include "advdm/pipeline.hpp"

using namespace advdm;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Experiment config (JSON, see docs/config.schema.json); defaults if omitted")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Seed override: model seed for training commands, pipeline seed otherwise");
}

ExperimentConfig load(const CommonOptions& opts, bool training) {
  ExperimentConfig cfg = opts.config.empty() ? ExperimentConfig{} : load_config(opts.config);
  if (opts.seed) {
    if (training) {
      cfg.model_seed = *opts.seed;
    } else {
      cfg.seeds = {*opts.seed};
    }
  }
  return cfg;
}

std::uint64_t pipeline_seed(const ExperimentConfig& cfg) { return cfg.seeds.front(); }

void write_tensors(const std::string& path, const std::string& what, std::vector<std::pair<std::string, Tensor>> arrays,
                   nlohmann::json meta = nlohmann::json::object()) {
  Checkpoint c;
  c.header["kind"] = "tensors";
  c.header["content"] = what;
  c.header["metadata"] = std::move(meta);
  for (auto& [name, t] : arrays) c.arrays.add(name, std::move(t));
  save_checkpoint(path, c);
  std::cout << "wrote " << path << " (sha256 " << file_sha256(path) << ")\n";
}

Tensor read_tensor(const std::string& path, const std::string& array) {
  const Checkpoint c = load_checkpoint(path);
  return c.arrays.get(array);
}

AttackSpec pick_attack(const ExperimentConfig& cfg, std::size_t index) {
  if (index >= cfg.attacks.size()) throw ConfigError("attack index out of range");
  return cfg.attacks[index];
}

DefenseConfig pick_defense(const ExperimentConfig& cfg, std::size_t index) {
  if (index >= cfg.defenses.size()) throw ConfigError("defense index out of range");
  return cfg.defenses[index];
}

void print_report(const MetricReport& r) {
  nlohmann::json j = {{"fid", r.fid},       {"precision", r.precision}, {"recall", r.recall},
                      {"n_real", r.n_real}, {"n_gen", r.n_gen},         {"k", r.k}};
  std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"advdm: adversarial examples for a toy latent diffusion model"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string out;
  std::string input;
  std::string array;
  std::string trace;
  std::size_t group = 0;
  std::size_t attack_index = 0;
  std::size_t defense_index = 0;
  std::size_t count = 50;
  int label = 0;

  auto* train_codec_cmd = app.add_subcommand("train-codec", "Train the latent codec and save its checkpoint");
  auto* train_diffusion_cmd =
      app.add_subcommand("train-diffusion", "Train the denoiser (training the codec first if needed)");
  auto* train_classifier_cmd = app.add_subcommand("train-classifier", "Train the baseline classifier");
  for (auto* cmd : {train_codec_cmd, train_diffusion_cmd, train_classifier_cmd}) {
    add_common(cmd, common);
  }

  auto* attack_cmd = app.add_subcommand("attack", "Attack one image group and save clean/adversarial tensors");
  add_common(attack_cmd, common);
  attack_cmd->add_option("--group", group, "Image group index (class = group mod classes)");
  attack_cmd->add_option("--attack-index", attack_index, "Entry of the config's attacks list");
  attack_cmd->add_option("--out", out, "Output tensor file")->required();
  attack_cmd->add_option("--trace", trace, "Per-iteration trace CSV (step,t,loss,max_delta)");

  auto* invert_cmd = app.add_subcommand("invert", "Invert a condition embedding S* from a tensor file");
  add_common(invert_cmd, common);
  invert_cmd->add_option("--input", input, "Tensor file holding the image group")->required()->check(CLI::ExistingFile);
  invert_cmd->add_option("--array", array, "Array name inside the tensor file")->default_val("adversarial");
  invert_cmd->add_option("--out", out, "Output embedding checkpoint")->required();

  auto* generate_cmd = app.add_subcommand("generate", "Generate images conditioned on an embedding checkpoint");
  add_common(generate_cmd, common);
  generate_cmd->add_option("--embedding", input, "Embedding checkpoint")->required()->check(CLI::ExistingFile);
  generate_cmd->add_option("--count", count, "Number of images")->default_val(50);
  generate_cmd->add_option("--out", out, "Output tensor file")->required();

  auto* defend_cmd = app.add_subcommand("defend", "Apply a preprocessing or purification defense");
  add_common(defend_cmd, common);
  defend_cmd->add_option("--input", input, "Tensor file")->required()->check(CLI::ExistingFile);
  defend_cmd->add_option("--array", array, "Array name inside the tensor file")->default_val("adversarial");
  defend_cmd->add_option("--defense-index", defense_index, "Entry of the config's defenses list");
  defend_cmd->add_option("--out", out, "Output tensor file")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Metrics of generated images against one class of the dataset");
  add_common(evaluate_cmd, common);
  evaluate_cmd->add_option("--input", input, "Tensor file of generated images")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--array", array, "Array name inside the tensor file")->default_val("generated");
  evaluate_cmd->add_option("--class", label, "Reference class")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Run every (attack, defense, seed) cell and write the run directory");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--out", out, "Output directory override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_codec_cmd->parsed()) {
      const auto cfg = load(common, true);
      const auto data = load_dataset(cfg.dataset);
      std::string hash;
      obtain_codec(cfg, data, &hash);
      std::cout << "codec checkpoint " << checkpoint_path(cfg, "codec") << " sha256 " << hash << '\n';
      return 0;
    }
    if (train_diffusion_cmd->parsed()) {
      const auto cfg = load(common, true);
      const auto models = prepare_models(cfg, false);
      std::cout << "diffusion checkpoint " << checkpoint_path(cfg, "diffusion") << " sha256 "
                << models.checkpoint_hashes.at("diffusion") << '\n';
      return 0;
    }
    if (train_classifier_cmd->parsed()) {
      const auto cfg = load(common, true);
      const auto data = load_dataset(cfg.dataset);
      std::string hash;
      const auto cls = obtain_classifier(cfg, data, &hash);
      std::cout << "classifier checkpoint " << checkpoint_path(cfg, "classifier") << " sha256 " << hash
                << " accuracy " << accuracy(cls, data.inputs, data.labels) << '\n';
      return 0;
    }

    const auto cfg = load(common, false);
    if (sweep_cmd->parsed()) {
      auto run_cfg = cfg;
      if (!out.empty()) run_cfg.output_dir = out;
      const auto models = prepare_models(run_cfg, false);
      const auto result = run_scenario(run_cfg, models, [](const CellResult& c) {
        std::cout << (c.ok ? "ok   " : "FAIL ") << c.attack.label() << " / " << to_string(c.defense.kind) << " / seed "
                  << c.seed;
        if (c.ok) {
          std::cout << "  fid " << c.report.fid << " precision " << c.report.precision << " recall " << c.report.recall;
        } else {
          std::cout << "  " << c.error;
        }
        std::cout << std::endl;
      });
      std::cout << "manifest " << (run_cfg.output_dir / "manifest.json").string() << '\n';
      return result.all_ok() ? 0 : 1;
    }

    const auto models = prepare_models(cfg, attack_cmd->parsed() && pick_attack(cfg, attack_index).kind ==
                                                                           AttackKind::pgd_classifier);
    const std::uint64_t seed = pipeline_seed(cfg);

    if (attack_cmd->parsed()) {
      const auto spec = pick_attack(cfg, attack_index);
      const auto g = select_group(models.data, group, cfg.scenario.inversion.group_size, seed);
      const Tensor x0 = gather_rows(models.data.inputs, g.rows);
      const std::vector<int> labels(g.rows.size(), g.label);
      RngStream rng = RngStream(seed).fork(group);
      AttackTrace tr;
      const Tensor x_adv = run_attack(models, spec, x0, labels, rng, &tr);
      const auto budget = verify_budget(x0, x_adv, spec.config.epsilon, models.data_range());
      std::cout << spec.label() << " class " << g.label << " max |delta| " << budget.max_deviation << " budget "
                << (budget.pass ? "ok" : "VIOLATED") << '\n';
      if (!trace.empty()) {
        std::ofstream f(trace);
        tr.write_csv(f);
      }
      write_tensors(out, "attack", {{"clean", x0}, {"adversarial", x_adv}},
                    {{"attack", spec.label()}, {"class", g.label}, {"seed", seed}});
      return budget.pass ? 0 : 1;
    }
    if (invert_cmd->parsed()) {
      RngStream rng = RngStream(seed).fork(0x1A7);
      const Tensor z = models.to_model_space(read_tensor(input, array));
      const auto inv = invert(models.denoiser(), models.schedule, z, cfg.scenario.inversion, rng);
      save_checkpoint(out, make_checkpoint(inv.embedding));
      std::cout << "inversion final loss " << inv.final_loss << " nearest class "
                << nearest_class(models.denoiser(), inv.embedding.vector) << "\nwrote " << out << '\n';
      return 0;
    }
    if (generate_cmd->parsed()) {
      RngStream rng = RngStream(seed).fork(0x6E7);
      const auto emb = embedding_from_checkpoint(load_checkpoint(input));
      const Tensor z = generate_from_inversion(models.denoiser(), models.schedule, emb, count, rng);
      write_tensors(out, "generated", {{"generated", models.from_model_space(z)}}, {{"seed", seed}});
      return 0;
    }
    if (defend_cmd->parsed()) {
      const auto defense = pick_defense(cfg, defense_index);
      RngStream rng = RngStream(seed).fork(0xDEF);
      PurifierContext purifier{&models.denoiser(), &models.schedule, models.codec ? &*models.codec : nullptr};
      const Tensor x = read_tensor(input, array);
      write_tensors(out, "defended",
                    {{"defended", apply_defense(defense, x, models.data.image_side, purifier, rng)}},
                    {{"defense", std::string(to_string(defense.kind))}});
      return 0;
    }
    if (evaluate_cmd->parsed()) {
      if (label < 0 || std::size_t(label) >= models.data.num_classes) throw ConfigError("class out of range");
      const auto real = models.features(models.data.class_inputs(label), FeatureSource::real, cfg.scenario.features);
      const auto gen = models.features(read_tensor(input, array), FeatureSource::generated, cfg.scenario.features);
      print_report(evaluate_features(real, gen, cfg.scenario.neighbors));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
