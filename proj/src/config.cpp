// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "advdm/errors.hpp"

namespace advdm {

using nlohmann::json;

AttackKind parse_attack_kind(std::string_view name) {
  if (name == "none") return AttackKind::none;
  if (name == "advdm") return AttackKind::advdm;
  if (name == "pgd_dm") return AttackKind::pgd_dm;
  if (name == "embedding") return AttackKind::embedding;
  if (name == "pgd_classifier") return AttackKind::pgd_classifier;
  throw ConfigError("unknown attack kind '" + std::string(name) + "'");
}

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::advdm: return "advdm";
    case AttackKind::pgd_dm: return "pgd_dm";
    case AttackKind::embedding: return "embedding";
    case AttackKind::pgd_classifier: return "pgd_classifier";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  if (name == "text2img_inversion") return ScenarioKind::text2img_inversion;
  if (name == "style_transfer") return ScenarioKind::style_transfer;
  if (name == "img2img") return ScenarioKind::img2img;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::text2img_inversion: return "text2img_inversion";
    case ScenarioKind::style_transfer: return "style_transfer";
    case ScenarioKind::img2img: return "img2img";
  }
  return "?";
}

namespace {

std::string budget_label(float v) {
  const double units = double(v) * 255.0;
  std::ostringstream out;
  if (std::abs(units - std::round(units)) < 1e-3) {
    out << std::llround(units) << "/255";
  } else {
    out.precision(6);
    out << v;
  }
  return out.str();
}

/// Reads the members of one JSON object and rejects any it was not asked about.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }

  void read_size(const char* key, std::size_t& out, std::size_t min = 0) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    if (!it->is_number_integer() || it->get<long long>() < static_cast<long long>(min)) {
      throw ConfigError(where(key) + ": expected an integer >= " + std::to_string(min));
    }
    out = it->get<std::size_t>();
  }

  void read_budget(const char* key, float& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it != node_.end()) out = parse_budget(*it, where(key));
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string where(std::string_view key) const { return path_ + "." + std::string(key); }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key " + where(it.key()));
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

DatasetSpec parse_dataset(const json& node) {
  DatasetSpec spec;
  ObjectReader r(node, "dataset");
  std::string kind = std::string(to_string(spec.kind));
  r.read("kind", kind);
  spec.kind = parse_dataset_kind(kind);
  r.read_size("classes", spec.classes, 1);
  r.read_size("per_class", spec.per_class, 1);
  r.read("seed", spec.seed);
  r.read("stddev", spec.stddev);
  r.read("radius", spec.radius);
  std::string images, labels;
  r.read("images", images);
  r.read("labels", labels);
  spec.images = images;
  spec.labels = labels;
  r.finish();
  return spec;
}

CodecSection parse_codec(const json& node) {
  CodecSection s;
  ObjectReader r(node, "codec");
  r.read("enabled", s.enabled);
  r.read_size("latent_dim", s.model.latent_dim, 1);
  r.read_size("hidden", s.model.hidden, 1);
  r.read("bounded_output", s.model.bounded_output);
  r.read_size("train_steps", s.train.steps);
  r.read_size("batch", s.train.batch, 1);
  r.read("learning_rate", s.train.learning_rate);
  r.read("validation_fraction", s.train.validation_fraction);
  r.read("threshold", s.train.threshold);
  r.finish();
  return s;
}

DiffusionSection parse_diffusion(const json& node) {
  DiffusionSection s;
  ObjectReader r(node, "diffusion");
  r.read_size("T", s.steps, 1);
  r.read("beta_start", s.beta_start);
  r.read("beta_end", s.beta_end);
  r.read_size("cond_dim", s.model.cond_dim, 1);
  r.read_size("time_dim", s.model.time_dim, 2);
  r.read_size("hidden", s.model.hidden, 1);
  r.read_size("depth", s.model.depth, 1);
  r.read_size("train_steps", s.train.steps);
  r.read_size("batch", s.train.batch, 1);
  r.read("learning_rate", s.train.learning_rate);
  r.read("uncond_prob", s.train.uncond_prob);
  r.read("ema_decay", s.train.ema_decay);
  if (const json* t = r.child("loss_threshold"); t && !t->is_null()) {
    if (!t->is_number()) throw ConfigError("diffusion.loss_threshold: expected a number");
    s.train.loss_threshold = t->get<float>();
  }
  r.finish();
  return s;
}

ClassifierSection parse_classifier(const json& node) {
  ClassifierSection s;
  ObjectReader r(node, "classifier");
  r.read_size("hidden", s.model.hidden, 1);
  r.read_size("train_steps", s.train.steps);
  r.read_size("batch", s.train.batch, 1);
  r.read("learning_rate", s.train.learning_rate);
  r.finish();
  return s;
}

AttackSpec parse_attack(const json& node, const std::string& path) {
  AttackSpec a;
  ObjectReader r(node, path);
  std::string kind = "none";
  r.read("kind", kind);
  a.kind = parse_attack_kind(kind);
  r.read_budget("epsilon", a.config.epsilon);
  r.read_budget("alpha", a.config.alpha);
  r.read_size("n_steps", a.config.n_steps, 1);
  r.read_size("draws_per_step", a.config.draws_per_step, 1);
  std::string mode = a.config.mode == AttackMode::latent ? "latent" : "pixel";
  r.read("mode", mode);
  if (mode == "latent") {
    a.config.mode = AttackMode::latent;
  } else if (mode == "pixel") {
    a.config.mode = AttackMode::pixel;
  } else {
    throw ConfigError(r.where("mode") + ": expected 'latent' or 'pixel'");
  }
  r.finish();
  a.config.validate();
  return a;
}

DefenseConfig parse_defense(const json& node, const std::string& path) {
  DefenseConfig d;
  ObjectReader r(node, path);
  std::string kind = "none";
  r.read("kind", kind);
  d.kind = parse_defense_kind(kind);
  r.read("quality", d.quality);
  r.read("tv_lambda", d.tv_lambda);
  r.read_size("tv_iters", d.tv_iters);
  r.read("resample_factor", d.resample_factor);
  r.read_size("t_star", d.t_star, 1);
  r.finish();
  d.validate();
  return d;
}

ScenarioSection parse_scenario(const json& node) {
  ScenarioSection s;
  ObjectReader r(node, "scenario");
  std::string kind = std::string(to_string(s.kind));
  r.read("kind", kind);
  s.kind = parse_scenario_kind(kind);
  r.read_size("groups", s.groups, 1);
  r.read_size("group_size", s.inversion.group_size, 1);
  r.read_size("samples_per_group", s.samples_per_group, 1);
  r.read("strength", s.strength);
  r.read_size("neighbors", s.neighbors, 1);
  std::string features = s.features == FeatureMode::encoder ? "encoder" : "pixel";
  r.read("features", features);
  if (features == "encoder") {
    s.features = FeatureMode::encoder;
  } else if (features == "pixel") {
    s.features = FeatureMode::pixel;
  } else {
    throw ConfigError("scenario.features: expected 'encoder' or 'pixel'");
  }
  if (const json* inv = r.child("inversion")) {
    ObjectReader ir(*inv, "scenario.inversion");
    ir.read_size("steps", s.inversion.steps);
    ir.read("step_length", s.inversion.step_length);
    ir.read_size("draws_per_image", s.inversion.draws_per_image, 1);
    ir.read("init_noise", s.inversion.init_noise);
    ir.finish();
  }
  r.finish();
  s.inversion.validate();
  return s;
}

}  // namespace

float parse_budget(const json& value, std::string_view field) {
  if (value.is_number()) return value.get<float>();
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    const auto slash = text.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        const double v = std::stod(text, &used);
        if (used == text.size()) return float(v);
      } else {
        const std::string num = text.substr(0, slash), den = text.substr(slash + 1);
        std::size_t un = 0, ud = 0;
        const double a = std::stod(num, &un), b = std::stod(den, &ud);
        if (un == num.size() && ud == den.size() && b != 0.0) return float(a / b);
      }
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(std::string(field) + ": expected a number or an \"a/b\" fraction");
}

std::string AttackSpec::label() const {
  std::string out(to_string(kind));
  if (kind == AttackKind::none) return out;
  out += ":eps=" + budget_label(config.epsilon) + ":n=" + std::to_string(config.n_steps);
  return out;
}

void ExperimentConfig::validate() const {
  if (attacks.empty()) throw ConfigError("attacks: at least one entry is required");
  if (defenses.empty()) throw ConfigError("defenses: at least one entry is required");
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (dataset.kind == DatasetKind::gaussian_mixture_2d && codec.enabled) {
    throw ConfigError("codec.enabled must be false for point data");
  }
  for (const auto& a : attacks) {
    a.config.validate();
    if (!codec.enabled && a.config.mode == AttackMode::latent && a.kind != AttackKind::none &&
        a.kind != AttackKind::pgd_classifier) {
      throw ConfigError("attack '" + a.label() + "' uses latent mode but the codec is disabled");
    }
    if (a.kind == AttackKind::embedding && !codec.enabled) {
      throw ConfigError("embedding attack requires the codec");
    }
  }
  for (const auto& d : defenses) {
    d.validate();
    if (d.t_star > diffusion.steps) throw ConfigError("defense t_star exceeds the diffusion length");
  }
  if (scenario.neighbors >= scenario.samples_per_group) {
    throw ConfigError("scenario.neighbors must be smaller than samples_per_group");
  }
  if (!(scenario.strength > 0.0 && scenario.strength <= 1.0)) throw ConfigError("scenario.strength must lie in (0, 1]");
}

ExperimentConfig parse_config(const json& document) {
  ExperimentConfig c;
  ObjectReader r(document, "config");
  if (const json* n = r.child("dataset")) c.dataset = parse_dataset(*n);
  if (c.dataset.kind == DatasetKind::gaussian_mixture_2d) c.codec.enabled = false;
  if (const json* n = r.child("codec")) c.codec = parse_codec(*n);
  if (const json* n = r.child("diffusion")) c.diffusion = parse_diffusion(*n);
  if (const json* n = r.child("classifier")) c.classifier = parse_classifier(*n);
  if (const json* n = r.child("attacks")) {
    if (!n->is_array()) throw ConfigError("config.attacks: expected an array");
    c.attacks.clear();
    for (std::size_t i = 0; i < n->size(); ++i) c.attacks.push_back(parse_attack((*n)[i], "attacks[" + std::to_string(i) + "]"));
  }
  if (const json* n = r.child("defenses")) {
    if (!n->is_array()) throw ConfigError("config.defenses: expected an array");
    c.defenses.clear();
    for (std::size_t i = 0; i < n->size(); ++i) {
      c.defenses.push_back(parse_defense((*n)[i], "defenses[" + std::to_string(i) + "]"));
    }
  }
  if (const json* n = r.child("scenario")) c.scenario = parse_scenario(*n);
  r.read("seeds", c.seeds);
  r.read("model_seed", c.model_seed);
  std::string out = c.output_dir.string();
  r.read("output_dir", out);
  c.output_dir = out;
  if (const json* n = r.child("checkpoints")) {
    ObjectReader cr(*n, "checkpoints");
    std::string codec, diffusion, classifier;
    cr.read("codec", codec);
    cr.read("diffusion", diffusion);
    cr.read("classifier", classifier);
    cr.finish();
    c.checkpoints = {codec, diffusion, classifier};
  }
  r.read("train_if_missing", c.train_if_missing);
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = {{"kind", to_string(c.dataset.kind)},   {"classes", c.dataset.classes},
                  {"per_class", c.dataset.per_class},    {"seed", c.dataset.seed},
                  {"stddev", c.dataset.stddev},          {"radius", c.dataset.radius},
                  {"images", c.dataset.images.string()}, {"labels", c.dataset.labels.string()}};
  j["codec"] = {{"enabled", c.codec.enabled},
                {"latent_dim", c.codec.model.latent_dim},
                {"hidden", c.codec.model.hidden},
                {"bounded_output", c.codec.model.bounded_output},
                {"train_steps", c.codec.train.steps},
                {"batch", c.codec.train.batch},
                {"learning_rate", c.codec.train.learning_rate},
                {"validation_fraction", c.codec.train.validation_fraction},
                {"threshold", c.codec.train.threshold}};
  j["diffusion"] = {{"T", c.diffusion.steps},
                    {"beta_start", c.diffusion.beta_start},
                    {"beta_end", c.diffusion.beta_end},
                    {"cond_dim", c.diffusion.model.cond_dim},
                    {"time_dim", c.diffusion.model.time_dim},
                    {"hidden", c.diffusion.model.hidden},
                    {"depth", c.diffusion.model.depth},
                    {"train_steps", c.diffusion.train.steps},
                    {"batch", c.diffusion.train.batch},
                    {"learning_rate", c.diffusion.train.learning_rate},
                    {"uncond_prob", c.diffusion.train.uncond_prob},
                    {"ema_decay", c.diffusion.train.ema_decay},
                    {"loss_threshold", c.diffusion.train.loss_threshold ? json(*c.diffusion.train.loss_threshold)
                                                                        : json(nullptr)}};
  j["classifier"] = {{"hidden", c.classifier.model.hidden},
                     {"train_steps", c.classifier.train.steps},
                     {"batch", c.classifier.train.batch},
                     {"learning_rate", c.classifier.train.learning_rate}};
  j["attacks"] = json::array();
  for (const auto& a : c.attacks) {
    j["attacks"].push_back({{"kind", to_string(a.kind)},
                            {"epsilon", a.config.epsilon},
                            {"alpha", a.config.alpha},
                            {"n_steps", a.config.n_steps},
                            {"draws_per_step", a.config.draws_per_step},
                            {"mode", a.config.mode == AttackMode::latent ? "latent" : "pixel"}});
  }
  j["defenses"] = json::array();
  for (const auto& d : c.defenses) {
    j["defenses"].push_back({{"kind", to_string(d.kind)},
                             {"quality", d.quality},
                             {"tv_lambda", d.tv_lambda},
                             {"tv_iters", d.tv_iters},
                             {"resample_factor", d.resample_factor},
                             {"t_star", d.t_star}});
  }
  const auto& s = c.scenario;
  j["scenario"] = {{"kind", to_string(s.kind)},
                   {"groups", s.groups},
                   {"group_size", s.inversion.group_size},
                   {"samples_per_group", s.samples_per_group},
                   {"strength", s.strength},
                   {"neighbors", s.neighbors},
                   {"features", s.features == FeatureMode::encoder ? "encoder" : "pixel"},
                   {"inversion",
                    {{"steps", s.inversion.steps},
                     {"step_length", s.inversion.step_length},
                     {"draws_per_image", s.inversion.draws_per_image},
                     {"init_noise", s.inversion.init_noise}}}};
  j["seeds"] = c.seeds;
  j["model_seed"] = c.model_seed;
  j["output_dir"] = c.output_dir.string();
  j["checkpoints"] = {{"codec", c.checkpoints.codec.string()},
                      {"diffusion", c.checkpoints.diffusion.string()},
                      {"classifier", c.checkpoints.classifier.string()}};
  j["train_if_missing"] = c.train_if_missing;
  return j;
}

}  // namespace advdm
