// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "advdm/errors.hpp"

namespace advdm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void append_bytes(std::vector<std::uint8_t>& out, const Tensor& t) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(t.data());
  out.insert(out.end(), p, p + t.size() * sizeof(float));
}

// Stream tags for RngStream::fork.
constexpr std::uint64_t kTagCodec = 0xC0DEC;
constexpr std::uint64_t kTagDiffusion = 0xD1FF;
constexpr std::uint64_t kTagClassifier = 0xC1A5;
constexpr std::uint64_t kTagInit = 1;
constexpr std::uint64_t kTagTrain = 2;
constexpr std::uint64_t kTagGroup = 0x6120;
constexpr std::uint64_t kTagAttack = 0xA77;
constexpr std::uint64_t kTagDefense = 0xDEF;
constexpr std::uint64_t kTagInvert = 0x1A7;
constexpr std::uint64_t kTagGenerate = 0x6E7;
constexpr std::uint64_t kTagSource = 0x50C;

bool needs_classifier(const ExperimentConfig& config) {
  return std::any_of(config.attacks.begin(), config.attacks.end(),
                     [](const AttackSpec& a) { return a.kind == AttackKind::pgd_classifier; });
}

void log_line(const std::string& text) { std::clog << "[advdm] " << text << '\n'; }

}  // namespace

// ---------------------------------------------------------------------------

Tensor TrainedModels::to_model_space(const Tensor& x) const { return codec ? codec->encode(x) : x; }

Tensor TrainedModels::from_model_space(const Tensor& z) const { return codec ? codec->decode(z) : z; }

FeatureBatch TrainedModels::features(const Tensor& x, FeatureSource source, FeatureMode mode) const {
  if (codec) return embed(*codec, x, source, mode);
  return FeatureBatch{x, source};
}

std::optional<std::pair<float, float>> TrainedModels::data_range() const {
  if (data.is_pixel()) return std::make_pair(0.0f, 1.0f);
  return std::nullopt;
}

std::filesystem::path checkpoint_path(const ExperimentConfig& config, const std::string& name) {
  const std::filesystem::path* explicit_path = nullptr;
  if (name == "codec") explicit_path = &config.checkpoints.codec;
  if (name == "diffusion") explicit_path = &config.checkpoints.diffusion;
  if (name == "classifier") explicit_path = &config.checkpoints.classifier;
  if (explicit_path && !explicit_path->empty()) return *explicit_path;
  return config.output_dir / "checkpoints" / (name + ".ckpt");
}

DiffusionSchedule schedule_of(const ExperimentConfig& config) {
  return DiffusionSchedule::linear(config.diffusion.steps, config.diffusion.beta_start, config.diffusion.beta_end);
}

DenoiserConfig denoiser_config_of(const ExperimentConfig& config, const Dataset& data) {
  DenoiserConfig dc = config.diffusion.model;
  dc.data_dim = config.codec.enabled ? config.codec.model.latent_dim : data.inputs.cols();
  dc.num_classes = data.num_classes;
  return dc;
}

namespace {

template <class Load, class Train>
auto load_or_train(const ExperimentConfig& config, const std::string& name, std::string* hash, StageTimings* timings,
                   Load load, Train train) {
  const auto path = checkpoint_path(config, name);
  const auto start = Clock::now();
  if (std::filesystem::exists(path)) {
    const auto bytes = read_file_bytes(path);
    auto model = load(decode_checkpoint(bytes));
    if (hash) *hash = sha256_hex(bytes);
    if (timings) timings->add("load_" + name, seconds_since(start));
    log_line("loaded " + name + " checkpoint " + path.string());
    return model;
  }
  if (!config.train_if_missing) {
    throw PreconditionError("checkpoint " + path.string() + " is missing and training is disabled");
  }
  log_line("training " + name);
  auto model = train();
  const auto bytes = encode_checkpoint(make_checkpoint(model));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  write_file_bytes(tmp, bytes);
  std::filesystem::rename(tmp, path);
  if (hash) *hash = sha256_hex(bytes);
  if (timings) timings->add("train_" + name, seconds_since(start));
  return model;
}

}  // namespace

LatentCodec obtain_codec(const ExperimentConfig& config, const Dataset& data, std::string* hash,
                         StageTimings* timings) {
  if (!data.is_pixel()) throw ModeError("the codec requires pixel data");
  CodecConfig cc = config.codec.model;
  cc.input_dim = data.inputs.cols();
  return load_or_train(
      config, "codec", hash, timings, [](const Checkpoint& c) { return codec_from_checkpoint(c); },
      [&] {
        RngStream rng = RngStream(config.model_seed).fork(kTagCodec);
        auto result = train_codec(data.inputs, cc, config.codec.train, rng);
        log_line("codec validation mse " + std::to_string(result.validation_mse));
        if (!result.met_threshold) log_line("warning: codec validation mse is above the configured threshold");
        return std::move(result.codec);
      });
}

namespace {

struct DenoiserWithSchedule {
  Denoiser model;
  DiffusionSchedule schedule;
};

Checkpoint make_checkpoint(const DenoiserWithSchedule& d) { return advdm::make_checkpoint(d.model, d.schedule); }

}  // namespace

Denoiser obtain_denoiser(const ExperimentConfig& config, const Dataset& data, const LatentCodec* codec,
                         std::string* hash, StageTimings* timings) {
  const auto sched = schedule_of(config);
  auto bundle = load_or_train(
      config, "diffusion", hash, timings,
      [](const Checkpoint& c) {
        auto b = denoiser_from_checkpoint(c);
        return DenoiserWithSchedule{std::move(b.model), std::move(b.schedule)};
      },
      [&] {
        const Tensor train_data = codec ? codec->encode(data.inputs) : data.inputs;
        RngStream root = RngStream(config.model_seed).fork(kTagDiffusion);
        RngStream init = root.fork(kTagInit);
        RngStream rng = root.fork(kTagTrain);
        Denoiser fresh(denoiser_config_of(config, data), init);
        auto result = train_denoiser(std::move(fresh), train_data, data.labels, sched, config.diffusion.train, rng);
        log_line("diffusion final loss " + std::to_string(result.final_loss));
        if (!result.met_threshold) log_line("warning: diffusion loss is above the configured threshold");
        return DenoiserWithSchedule{std::move(result.model), sched};
      });
  if (bundle.schedule.steps() != sched.steps()) {
    throw ConfigError("diffusion checkpoint schedule length does not match the config");
  }
  if (bundle.model.data_dim() != (codec ? codec->latent_dim() : data.inputs.cols())) {
    throw DimensionError("diffusion checkpoint data dimension does not match the data space");
  }
  return std::move(bundle.model);
}

Classifier obtain_classifier(const ExperimentConfig& config, const Dataset& data, std::string* hash,
                             StageTimings* timings) {
  ClassifierConfig cc = config.classifier.model;
  cc.input_dim = data.inputs.cols();
  cc.num_classes = data.num_classes;
  return load_or_train(
      config, "classifier", hash, timings, [](const Checkpoint& c) { return classifier_from_checkpoint(c); },
      [&] {
        RngStream rng = RngStream(config.model_seed).fork(kTagClassifier);
        auto result = train_classifier(data.inputs, data.labels, cc, config.classifier.train, rng);
        log_line("classifier train accuracy " + std::to_string(result.train_accuracy));
        return std::move(result.model);
      });
}

TrainedModels prepare_models(const ExperimentConfig& config, bool need_classifier, StageTimings* timings) {
  TrainedModels m;
  const auto start = Clock::now();
  m.data = load_dataset(config.dataset);
  if (timings) timings->add("load_dataset", seconds_since(start));
  m.schedule = schedule_of(config);
  if (config.codec.enabled) {
    m.codec = obtain_codec(config, m.data, &m.checkpoint_hashes["codec"], timings);
  }
  m.model = obtain_denoiser(config, m.data, m.codec ? &*m.codec : nullptr, &m.checkpoint_hashes["diffusion"], timings);
  if (need_classifier || needs_classifier(config)) {
    m.classifier = obtain_classifier(config, m.data, &m.checkpoint_hashes["classifier"], timings);
  }
  return m;
}

// ---------------------------------------------------------------------------

Tensor run_attack(const TrainedModels& models, const AttackSpec& spec, const Tensor& x0, std::span<const int> labels,
                  RngStream& rng, AttackTrace* trace) {
  AttackConfig cfg = spec.config;
  cfg.data_range = models.data_range();
  if (!models.codec) cfg.mode = AttackMode::pixel;
  const LatentCodec* codec = models.codec ? &*models.codec : nullptr;
  const Tensor null_cond = models.denoiser().null_condition();
  switch (spec.kind) {
    case AttackKind::none: return x0;
    case AttackKind::advdm: return advdm(models.denoiser(), models.schedule, codec, x0, null_cond, cfg, rng, trace);
    case AttackKind::pgd_dm: return pgd_dm(models.denoiser(), models.schedule, codec, x0, null_cond, cfg, rng, trace);
    case AttackKind::embedding:
      if (!codec) throw ConfigError("embedding attack requires the codec");
      return embedding_attack(*codec, x0, cfg, rng, trace);
    case AttackKind::pgd_classifier:
      if (!models.classifier) throw PreconditionError("pgd_classifier requires a trained classifier");
      return pgd_classifier(*models.classifier, x0, labels, cfg, rng, trace);
  }
  throw ConfigError("unhandled attack kind");
}

ImageGroup select_group(const Dataset& data, std::size_t group, std::size_t group_size, std::uint64_t seed) {
  ImageGroup g;
  g.label = int(group % data.num_classes);
  auto rows = data.rows_of_class(g.label);
  // Seeded Fisher-Yates; the k-th group of a class takes the k-th consecutive slice (wrapping).
  RngStream rng = RngStream(seed).fork(kTagGroup + std::uint64_t(g.label));
  for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[std::size_t(rng.uniform_int(0, std::int64_t(i - 1)))]);
  const std::size_t slot = group / data.num_classes;
  for (std::size_t i = 0; i < group_size; ++i) g.rows.push_back(rows[(slot * group_size + i) % rows.size()]);
  return g;
}

namespace {

void merge_budget(BudgetReport& into, const BudgetReport& b, std::size_t offset) {
  into.pass = into.pass && b.pass;
  if (b.max_deviation > into.max_deviation) {
    into.max_deviation = b.max_deviation;
    into.max_index = offset + b.max_index;
  }
  into.budget_violations += b.budget_violations;
  into.range_violations += b.range_violations;
  if (!into.first_budget_violation && b.first_budget_violation) into.first_budget_violation = offset + *b.first_budget_violation;
  if (!into.first_range_violation && b.first_range_violation) into.first_range_violation = offset + *b.first_range_violation;
}

Tensor generate_for_group(const TrainedModels& models, const ScenarioSection& scenario, const ImageGroup& group,
                          const Tensor& z_group, RngStream& group_rng, std::uint64_t seed) {
  const auto& model = models.denoiser();
  RngStream inv_rng = group_rng.fork(kTagInvert);
  RngStream gen_rng = group_rng.fork(kTagGenerate);
  const std::size_t count = scenario.samples_per_group;

  if (scenario.kind == ScenarioKind::img2img) {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i % z_group.rows();
    const Tensor cond = model.class_embedding(group.label);
    return img2img(model, models.schedule, cond, gather_rows(z_group, idx), scenario.strength, gen_rng);
  }

  InversionConfig ic = scenario.inversion;
  ic.group_size = z_group.rows();
  const InversionResult inv = invert(model, models.schedule, z_group, ic, inv_rng);
  if (scenario.kind == ScenarioKind::text2img_inversion) {
    return generate_from_inversion(model, models.schedule, inv.embedding, count, gen_rng);
  }
  // Style transfer: start from images of the next class, steer them with S*.
  const int source_label = int((group.label + 1) % int(models.data.num_classes));
  auto rows = models.data.rows_of_class(source_label);
  RngStream src_rng = RngStream(seed).fork(kTagSource + std::uint64_t(group.label));
  std::vector<std::size_t> pick(count);
  for (auto& r : pick) r = rows[std::size_t(src_rng.uniform_int(0, std::int64_t(rows.size() - 1)))];
  const Tensor source = models.to_model_space(gather_rows(models.data.inputs, pick));
  return style_transfer(model, models.schedule, inv.embedding, source, scenario.strength, gen_rng);
}

}  // namespace

CellResult run_cell(const TrainedModels& models, const ScenarioSection& scenario, const AttackSpec& attack,
                    const DefenseConfig& defense, std::uint64_t seed, const CellOptions& options) {
  CellResult cell;
  cell.scenario = scenario.kind;
  cell.attack = attack;
  cell.defense = defense;
  cell.seed = seed;

  const std::size_t side = models.data.image_side;
  PurifierContext purifier{&models.denoiser(), &models.schedule, models.codec ? &*models.codec : nullptr};
  std::vector<std::uint8_t> digest_input;
  double attack_seconds = 0.0;
  std::size_t attacked = 0;
  std::map<int, FeatureBatch> real_cache;

  for (std::size_t g = 0; g < scenario.groups; ++g) {
    const ImageGroup group = select_group(models.data, g, scenario.inversion.group_size, seed);
    RngStream group_rng = RngStream(seed).fork(g);
    const Tensor x0 = gather_rows(models.data.inputs, group.rows);
    const std::vector<int> labels(group.rows.size(), group.label);

    RngStream attack_rng = group_rng.fork(kTagAttack);
    const auto start = Clock::now();
    const Tensor x_adv = run_attack(models, attack, x0, labels, attack_rng);
    attack_seconds += seconds_since(start);
    attacked += x0.rows();
    if (attack.kind != AttackKind::none) {
      merge_budget(cell.budget, verify_budget(x0, x_adv, attack.config.epsilon, models.data_range()), g * x0.size());
    }

    RngStream defense_rng = group_rng.fork(kTagDefense);
    const Tensor x_def = apply_defense(defense, x_adv, side, purifier, defense_rng);

    const Tensor z_group = models.to_model_space(x_def);
    const Tensor z_gen = generate_for_group(models, scenario, group, z_group, group_rng, seed);
    const Tensor images = models.from_model_space(z_gen);

    auto it = real_cache.find(group.label);
    if (it == real_cache.end()) {
      it = real_cache
               .emplace(group.label,
                        models.features(models.data.class_inputs(group.label), FeatureSource::real, scenario.features))
               .first;
    }
    const FeatureBatch gen = models.features(images, FeatureSource::generated, scenario.features);
    cell.per_group.push_back(evaluate_features(it->second, gen, scenario.neighbors));

    append_bytes(digest_input, x_adv);
    append_bytes(digest_input, x_def);
    append_bytes(digest_input, images);
    if (options.keep_tensors) {
      cell.clean_groups.push_back(x0);
      cell.adversarial_groups.push_back(x_adv);
    }
  }

  cell.report = cell.per_group.front();
  double fid = 0, prec = 0, rec = 0;
  for (const auto& r : cell.per_group) {
    fid += r.fid;
    prec += r.precision;
    rec += r.recall;
  }
  const double n = double(cell.per_group.size());
  cell.report.fid = fid / n;
  cell.report.precision = prec / n;
  cell.report.recall = rec / n;
  cell.attack_seconds_per_example = attacked ? attack_seconds / double(attacked) : 0.0;
  cell.outputs_hash = sha256_hex(digest_input);
  cell.ok = true;
  return cell;
}

DefenseEvaluation defend_then_evaluate(const TrainedModels& models, const ScenarioSection& scenario,
                                       const AttackSpec& attack, const DefenseConfig& defense, std::uint64_t seed) {
  DefenseEvaluation out;
  out.clean = run_cell(models, scenario, AttackSpec{}, DefenseConfig{}, seed).report;
  out.undefended = run_cell(models, scenario, attack, DefenseConfig{}, seed).report;
  out.defended = run_cell(models, scenario, attack, defense, seed).report;
  return out;
}

// ---------------------------------------------------------------------------

std::string config_hash(const ExperimentConfig& config) {
  auto j = to_json(config);
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["checkpoints"] = checkpoint_hashes;
  j["artifacts"] = artifact_hashes;
  j["cells"] = nlohmann::json::array();
  for (const auto& [key, hash] : cell_hashes) j["cells"].push_back({{"cell", key}, {"outputs_hash", hash}});
  j["timing_seconds"] = nlohmann::json::object();
  for (const auto& [stage, s] : timings.entries) j["timing_seconds"][stage] = s;
  return j;
}

bool RunManifest::same_hashes(const RunManifest& o) const {
  return config_hash == o.config_hash && checkpoint_hashes == o.checkpoint_hashes &&
         artifact_hashes == o.artifact_hashes && cell_hashes == o.cell_hashes;
}

bool RunResult::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::string cell_key(const CellResult& c) {
  return std::string(to_string(c.scenario)) + "|" + c.attack.label() + "|" + std::string(to_string(c.defense.kind)) +
         "|" + std::to_string(c.seed);
}

/// The single writer for a run directory.
class RunWriter {
 public:
  explicit RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    write_text_atomic(dir_ / name, text);
    const std::string h = sha256_hex(text);
    hashes_[name] = h;
    return h;
  }
  void record(const std::map<std::string, std::string>& more) {
    for (const auto& [k, v] : more) hashes_[k] = v;
  }
  const std::map<std::string, std::string>& hashes() const { return hashes_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> hashes_;
};

}  // namespace

RunResult run_scenario(const ExperimentConfig& config, const TrainedModels& models,
                       const std::function<void(const CellResult&)>& on_cell) {
  RunResult run;
  run.manifest.config_hash = config_hash(config);
  run.manifest.checkpoint_hashes = models.checkpoint_hashes;
  RunWriter writer(config.output_dir);
  // covered by config_hash; the file itself carries output_dir
  write_text_atomic(writer.dir() / "config.json", to_json(config).dump(2) + "\n");
  writer.write("metrics.schema.json", metric_csv_schema().dump(2) + "\n");

  std::vector<MetricRow> rows;
  for (std::size_t a = 0; a < config.attacks.size(); ++a) {
    for (std::size_t d = 0; d < config.defenses.size(); ++d) {
      for (std::uint64_t seed : config.seeds) {
        const auto start = Clock::now();
        CellResult cell;
        try {
          cell = run_cell(models, config.scenario, config.attacks[a], config.defenses[d], seed);
        } catch (const std::exception& e) {
          cell = CellResult{};
          cell.scenario = config.scenario.kind;
          cell.attack = config.attacks[a];
          cell.defense = config.defenses[d];
          cell.seed = seed;
          cell.ok = false;
          cell.error = e.what();
          log_line("cell " + cell_key(cell) + " failed: " + cell.error);
        }
        run.manifest.timings.add("cell " + cell_key(cell), seconds_since(start));
        if (cell.ok) {
          rows.push_back(to_row(cell));
          run.manifest.cell_hashes.emplace_back(cell_key(cell), cell.outputs_hash);
          std::ostringstream csv;
          write_metric_csv(csv, rows);
          writer.write("metrics.csv", csv.str());
        }
        if (on_cell) on_cell(cell);
        run.cells.push_back(std::move(cell));
      }
    }
  }
  if (rows.empty()) {
    std::ostringstream csv;
    write_metric_csv(csv, rows);
    writer.write("metrics.csv", csv.str());
  }
  writer.record(emit_plot_data(rows, writer.dir()));
  run.manifest.artifact_hashes = writer.hashes();
  write_text_atomic(writer.dir() / "manifest.json", run.manifest.to_json().dump(2) + "\n");
  return run;
}

// ---------------------------------------------------------------------------

MetricRow to_row(const CellResult& c) {
  MetricRow r;
  r.scenario = std::string(to_string(c.scenario));
  r.attack = std::string(to_string(c.attack.kind));
  r.epsilon = c.attack.kind == AttackKind::none ? 0.0 : double(c.attack.config.epsilon);
  r.n_steps = c.attack.kind == AttackKind::none ? 0 : c.attack.config.n_steps;
  r.defense = std::string(to_string(c.defense.kind));
  r.seed = c.seed;
  r.fid = c.report.fid;
  r.precision = c.report.precision;
  r.recall = c.report.recall;
  r.n_real = c.report.n_real;
  r.n_gen = c.report.n_gen;
  r.k = c.report.k;
  r.max_deviation = c.budget.max_deviation;
  r.budget_ok = c.budget.pass;
  return r;
}

namespace {

constexpr const char* kMetricHeader =
    "scenario,attack,epsilon,n_steps,defense,seed,fid,precision,recall,n_real,n_gen,k,max_deviation,budget_ok";

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_metric_csv(std::ostream& out, std::span<const MetricRow> rows) {
  out << kMetricHeader << '\n';
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.attack << ',' << fmt(r.epsilon) << ',' << r.n_steps << ',' << r.defense << ','
        << r.seed << ',' << fmt(r.fid) << ',' << fmt(r.precision) << ',' << fmt(r.recall) << ',' << r.n_real << ','
        << r.n_gen << ',' << r.k << ',' << fmt(r.max_deviation) << ',' << (r.budget_ok ? 1 : 0) << '\n';
  }
}

std::vector<MetricRow> parse_metric_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricHeader) throw FormatError("metrics CSV header mismatch");
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 14) throw FormatError("metrics CSV row has " + std::to_string(f.size()) + " fields");
    MetricRow r;
    r.scenario = f[0];
    r.attack = f[1];
    r.epsilon = std::stod(f[2]);
    r.n_steps = std::stoull(f[3]);
    r.defense = f[4];
    r.seed = std::stoull(f[5]);
    r.fid = std::stod(f[6]);
    r.precision = std::stod(f[7]);
    r.recall = std::stod(f[8]);
    r.n_real = std::stoull(f[9]);
    r.n_gen = std::stoull(f[10]);
    r.k = std::stoull(f[11]);
    r.max_deviation = std::stod(f[12]);
    r.budget_ok = f[13] == "1";
    rows.push_back(r);
  }
  return rows;
}

nlohmann::json metric_csv_schema() {
  using nlohmann::json;
  auto col = [](const char* name, const char* type, const char* text) {
    return json{{"name", name}, {"type", type}, {"description", text}};
  };
  return json{{"file", "metrics.csv"},
              {"key", {"scenario", "attack", "epsilon", "n_steps", "defense", "seed"}},
              {"columns",
               {col("scenario", "string", "text2img_inversion, style_transfer or img2img"),
                col("attack", "string", "none, advdm, pgd_dm, embedding or pgd_classifier"),
                col("epsilon", "float", "L-infinity budget in data units (0 for none)"),
                col("n_steps", "integer", "attack iterations (0 for none)"),
                col("defense", "string", "none, jpeg_like, tvm, resample or diffpure"),
                col("seed", "integer", "pipeline seed"),
                col("fid", "float", "Frechet distance, mean over image groups"),
                col("precision", "float", "k-NN precision in [0,1], mean over image groups"),
                col("recall", "float", "k-NN recall in [0,1], mean over image groups"),
                col("n_real", "integer", "reference feature count per group"),
                col("n_gen", "integer", "generated feature count per group"),
                col("k", "integer", "neighbour count of the precision/recall estimator"),
                col("max_deviation", "float", "largest |x_adv - x| over the cell"),
                col("budget_ok", "integer", "1 when every adversarial output passed verify_budget")}}};
}

std::map<std::string, std::string> plot_data(std::span<const MetricRow> rows, const PlotFilter& filter) {
  std::vector<MetricRow> kept;
  for (const auto& r : rows)
    if (r.attack == filter.attack && r.defense == filter.defense) kept.push_back(r);

  auto by_n = kept;
  std::stable_sort(by_n.begin(), by_n.end(), [](const MetricRow& a, const MetricRow& b) {
    return std::tie(a.n_steps, a.epsilon, a.seed) < std::tie(b.n_steps, b.epsilon, b.seed);
  });
  auto by_eps = kept;
  std::stable_sort(by_eps.begin(), by_eps.end(), [](const MetricRow& a, const MetricRow& b) {
    return std::tie(a.epsilon, a.n_steps, a.seed) < std::tie(b.epsilon, b.n_steps, b.seed);
  });

  std::ostringstream fid_n, prec_n, fid_eps;
  fid_n << "n_steps,epsilon,seed,fid\n";
  prec_n << "n_steps,epsilon,seed,precision\n";
  fid_eps << "epsilon,n_steps,seed,fid\n";
  for (const auto& r : by_n) {
    fid_n << r.n_steps << ',' << fmt(r.epsilon) << ',' << r.seed << ',' << fmt(r.fid) << '\n';
    prec_n << r.n_steps << ',' << fmt(r.epsilon) << ',' << r.seed << ',' << fmt(r.precision) << '\n';
  }
  for (const auto& r : by_eps) fid_eps << fmt(r.epsilon) << ',' << r.n_steps << ',' << r.seed << ',' << fmt(r.fid) << '\n';

  using nlohmann::json;
  const json schema = {
      {"filter", {{"attack", filter.attack}, {"defense", filter.defense}}},
      {"fid_vs_n.csv", {{"sorted_by", {"n_steps", "epsilon", "seed"}}, {"columns", {"n_steps", "epsilon", "seed", "fid"}}}},
      {"precision_vs_n.csv",
       {{"sorted_by", {"n_steps", "epsilon", "seed"}}, {"columns", {"n_steps", "epsilon", "seed", "precision"}}}},
      {"fid_vs_eps.csv", {{"sorted_by", {"epsilon", "n_steps", "seed"}}, {"columns", {"epsilon", "n_steps", "seed", "fid"}}}},
      {"units", {{"epsilon", "data units in [0,1]"}, {"fid", "Frechet distance in feature space"}}}};
  return {{"fid_vs_n.csv", fid_n.str()},
          {"precision_vs_n.csv", prec_n.str()},
          {"fid_vs_eps.csv", fid_eps.str()},
          {"plot_data.schema.json", schema.dump(2) + "\n"}};
}

std::map<std::string, std::string> emit_plot_data(std::span<const MetricRow> rows, const std::filesystem::path& dir,
                                                  const PlotFilter& filter) {
  std::map<std::string, std::string> hashes;
  for (const auto& [name, text] : plot_data(rows, filter)) {
    write_text_atomic(dir / name, text);
    hashes[name] = sha256_hex(text);
  }
  return hashes;
}

}  // namespace advdm
