// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion. Exits non-zero on any FAIL not listed
// in --expect-fail; a listed criterion still prints FAIL, and prints a note if it starts passing.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "advdm/attacks.hpp"
#include "advdm/defenses.hpp"
#include "advdm/errors.hpp"
#include "advdm/metrics.hpp"
#include "advdm/pipeline.hpp"
#include "oracles.hpp"

using namespace advdm;
using advdm::testing::brute_force_pr;
using advdm::testing::central_difference;
using advdm::testing::median;
using advdm::testing::relative_error;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kFdTolerance = 1e-3;
constexpr std::size_t kFdInstances = 20;
constexpr double kRankTolerance = 0.25;  // on FID gaps normalised by the AdvDM gap
const std::vector<std::uint64_t> kSeeds{0, 1, 2};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%.3f") {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : "/") + fmt(f, x);
  return s;
}

bool non_decreasing(const std::vector<double>& v) { return std::is_sorted(v.begin(), v.end()); }
bool non_increasing(const std::vector<double>& v) { return std::is_sorted(v.rbegin(), v.rend()); }

AttackSpec attack(AttackKind kind, int eps_255 = 8, std::size_t n = 40) {
  AttackSpec a;
  a.kind = kind;
  a.config.epsilon = float(eps_255) / 255.0f;
  a.config.n_steps = n;
  return a;
}

DefenseConfig defense(DefenseKind kind = DefenseKind::none) {
  DefenseConfig d;
  d.kind = kind;
  return d;
}

class Acceptance {
 public:
  explicit Acceptance(fs::path work) : work_(std::move(work)) {}

  void prepare() {
    base_ = ExperimentConfig{};
    base_.output_dir = work_ / "c4";
    const auto start = Clock::now();
    models_ = prepare_models(base_, true);
    std::printf("models ready in %.1fs (checkpoints under %s)\n", seconds_since(start),
                (base_.output_dir / "checkpoints").string().c_str());
  }

  Outcome gradients();
  Outcome forward_moments();
  Outcome generative_sanity();
  Outcome core_attack();
  Outcome step_ablation();
  Outcome budget_ablation();
  Outcome attack_ranking();
  Outcome equivalence();
  Outcome defense_partiality();
  Outcome metric_oracles();
  Outcome budget_sweep();
  Outcome determinism();

  static double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

 private:
  std::string key(const AttackSpec& a, const DefenseConfig& d, std::uint64_t seed) const {
    return a.label() + "|" + std::string(to_string(d.kind)) + "|" + std::to_string(seed);
  }

  const CellResult& cell(const AttackSpec& a, const DefenseConfig& d, std::uint64_t seed) {
    const std::string k = key(a, d, seed);
    auto it = cells_.find(k);
    if (it == cells_.end()) it = cells_.emplace(k, run_cell(models_, base_.scenario, a, d, seed)).first;
    if (!it->second.ok) throw advdm::Error("cell " + k + " failed: " + it->second.error);
    return it->second;
  }

  std::vector<double> over_seeds(const AttackSpec& a, const DefenseConfig& d,
                                 const std::function<double(const CellResult&)>& f) {
    std::vector<double> v;
    for (auto s : kSeeds) v.push_back(f(cell(a, d, s)));
    return v;
  }

  double median_fid(const AttackSpec& a, const DefenseConfig& d = defense()) {
    return median(over_seeds(a, d, [](const CellResult& c) { return c.report.fid; }));
  }
  double median_precision(const AttackSpec& a, const DefenseConfig& d = defense()) {
    return median(over_seeds(a, d, [](const CellResult& c) { return c.report.precision; }));
  }

  const RunResult& criterion4_run() {
    if (!core_run_) {
      ExperimentConfig c = base_;
      c.attacks = {attack(AttackKind::none), attack(AttackKind::advdm)};
      c.defenses = {defense()};
      c.seeds = kSeeds;
      c.output_dir = work_ / "c4";
      core_run_ = run_scenario(c, models_);
      for (const auto& cr : core_run_->cells) cells_.emplace(key(cr.attack, cr.defense, cr.seed), cr);
    }
    return *core_run_;
  }

  fs::path work_;
  ExperimentConfig base_;
  TrainedModels models_;
  std::map<std::string, CellResult> cells_;
  std::optional<RunResult> core_run_;
  std::vector<BudgetReport> equivalence_budgets_;
};

// ---------------------------------------------------------------------------

Outcome Acceptance::gradients() {
  const Denoiser& model = models_.denoiser();
  const auto& sched = models_.schedule;
  const LatentCodec& codec = *models_.codec;
  const Tensor latents = models_.to_model_space(models_.data.inputs);
  const std::size_t n = latents.rows();
  RngStream rng(101);
  const auto pick = [&](std::size_t count, const Tensor& from) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < count; ++i) rows.push_back(std::size_t(rng.uniform_int(0, std::int64_t(n) - 1)));
    return gather_rows(from, rows);
  };
  double worst[4] = {0, 0, 0, 0};

  for (std::size_t i = 0; i < kFdInstances; ++i) {
    // l_dm with respect to x0
    const Tensor x0 = pick(3, latents);
    const Tensor eps = gaussian(rng, x0.shape());
    const Tensor cond = model.class_embedding(int(rng.uniform_int(0, std::int64_t(model.config().num_classes) - 1)));
    const std::size_t t = std::size_t(rng.uniform_int(1, std::int64_t(sched.steps())));
    const std::vector<int> steps(x0.rows(), int(t));
    const Tensor gx = gradient(
        [&](GradientTape& tape, Var x) {
          return diffusion_loss(tape, model, x, tape.constant(cond), steps, tape.constant(eps), sched);
        },
        x0);
    worst[0] = std::max(worst[0], relative_error(gx, central_difference([&](const Tensor& x) {
                                                   return testing::l_dm_double(model, x, cond, t, eps, sched);
                                                 }, x0)));

    // inversion loss with respect to the condition embedding
    const Tensor group = pick(5, latents);
    const Tensor geps = gaussian(rng, group.shape());
    const Tensor c0 = gaussian(rng, {1, model.config().cond_dim});
    const std::vector<int> gsteps(group.rows(), int(t));
    const Tensor gc = gradient(
        [&](GradientTape& tape, Var c) {
          return diffusion_loss(tape, model, tape.constant(group), c, gsteps, tape.constant(geps), sched);
        },
        c0);
    worst[1] = std::max(worst[1], relative_error(gc, central_difference([&](const Tensor& c) {
                                                   return testing::l_dm_double(model, group, c, t, geps, sched);
                                                 }, c0)));

    // embedding-attack objective with respect to the image
    const Tensor img = pick(1, models_.data.inputs);
    const Tensor z0 = codec.encode(img);
    Tensor xa = uniform(rng, img.shape(), -8.0f / 255.0f, 8.0f / 255.0f);
    for (std::size_t j = 0; j < xa.size(); ++j) xa[j] += img[j];
    const Tensor ge = gradient([&](GradientTape& tape, Var x) { return embedding_objective(tape, codec, x, z0); }, xa);
    worst[2] = std::max(worst[2], relative_error(ge, central_difference([&](const Tensor& x) {
                                                   const auto z = testing::encode_double(codec, x);
                                                   double s = 0;
                                                   for (std::size_t j = 0; j < z.size(); ++j)
                                                     s += (z[j] - z0[j]) * (z[j] - z0[j]);
                                                   return std::sqrt(s + double(kEmbeddingRootOffset));
                                                 }, xa)));

    // TV objective; draws with a neighbour gap inside the smoothing kink are redrawn
    const std::size_t side = 4;
    const Tensor xt = uniform(rng, {1, side * side}, 0.0f, 1.0f);
    Tensor y0 = uniform(rng, {1, side * side}, 0.0f, 1.0f);
    const auto min_gap = [&](const Tensor& y) {
      double g = 1e9;
      for (std::size_t p = 0; p < side * side; ++p) {
        if (p % side + 1 < side) g = std::min(g, double(std::abs(y[p + 1] - y[p])));
        if (p + side < side * side) g = std::min(g, double(std::abs(y[p + side] - y[p])));
      }
      return g;
    };
    while (min_gap(y0) < 10.0 * kTvSmoothing) y0 = uniform(rng, {1, side * side}, 0.0f, 1.0f);
    const Tensor gt = gradient([&](GradientTape& tape, Var y) { return tv_objective(tape, y, xt, side, 0.1f); }, y0);
    worst[3] = std::max(worst[3], relative_error(gt, central_difference([&](const Tensor& y) {
                                                   return testing::tv_objective_double(y, xt, side, 0.1, kTvSmoothing);
                                                 }, y0)));
  }
  const bool pass = std::all_of(std::begin(worst), std::end(worst), [](double w) { return w < kFdTolerance; });
  return {pass, std::to_string(kFdInstances) + " instances each; worst rel err l_dm " + fmt("%.1e", worst[0]) +
                    ", inversion " + fmt("%.1e", worst[1]) + ", embedding " + fmt("%.1e", worst[2]) + ", tv " +
                    fmt("%.1e", worst[3]) + " (< 1e-3)"};
}

Outcome Acceptance::forward_moments() {
  const auto& sched = models_.schedule;
  const double x0 = 0.7;
  const std::size_t n = 100000;
  RngStream rng(202);
  double worst = 0;  // in units of the standard error
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const std::size_t t = std::max<std::size_t>(1, i * sched.steps() / 9);
    const double ab = sched.alpha_bar(t);
    const Tensor xt = forward_diffuse(Tensor({n, 1}, float(x0)), t, gaussian(rng, {n, 1}), sched);
    double m = 0, v = 0;
    for (std::size_t r = 0; r < n; ++r) m += xt[r];
    m /= double(n);
    for (std::size_t r = 0; r < n; ++r) v += (xt[r] - m) * (xt[r] - m);
    v /= double(n - 1);
    const double var = 1.0 - ab;
    worst = std::max(worst, std::abs(m - std::sqrt(ab) * x0) / std::sqrt(var / double(n)));
    worst = std::max(worst, std::abs(v - var) / (var * std::sqrt(2.0 / double(n - 1))));
    ++checked;
  }
  return {worst <= 3.0, std::to_string(checked) + " timesteps, n = 1e5; worst deviation " + fmt("%.2f", worst) +
                            " standard errors (<= 3)"};
}

Outcome Acceptance::generative_sanity() {
  const Denoiser& model = models_.denoiser();
  const Tensor data = models_.to_model_space(models_.data.inputs);
  const std::size_t n = data.rows();
  std::vector<double> ratios;
  bool pass = true;
  for (auto seed : kSeeds) {
    RngStream rng = RngStream(seed).fork(0x5a);
    const Tensor samples = sample(model, models_.schedule, model.null_condition(), rng, n);
    const Tensor noise = gaussian(rng, data.shape());
    const double ratio = frechet(samples, data) / frechet(noise, data);
    ratios.push_back(ratio);
    pass = pass && ratio < 0.25;
  }
  return {pass, "model-space FD(samples, data) / FD(noise, data) per seed " + join(ratios) + " (< 0.25)"};
}

Outcome Acceptance::core_attack() {
  const RunResult& run = criterion4_run();
  if (!run.all_ok()) return {false, "a cell failed"};
  std::vector<double> ratios;
  bool pass = true;
  std::string prec;
  for (auto s : kSeeds) {
    const CellResult& clean = cell(attack(AttackKind::none), defense(), s);
    const CellResult& adv = cell(attack(AttackKind::advdm), defense(), s);
    ratios.push_back(adv.report.fid / clean.report.fid);
    pass = pass && adv.report.fid > 1.5 * clean.report.fid && adv.report.precision < clean.report.precision;
    prec += (prec.empty() ? "" : ", ") + fmt("%.3f", adv.report.precision) + " < " + fmt("%.3f", clean.report.precision);
  }
  return {pass, "FID ratio per seed " + join(ratios, "%.2f") + " (> 1.5); precision " + prec};
}

Outcome Acceptance::step_ablation() {
  const std::vector<std::size_t> ns{10, 40, 100};
  std::vector<double> fids, per_step;
  for (auto n : ns) {
    const AttackSpec a = attack(AttackKind::advdm, 8, n);
    fids.push_back(median_fid(a));
    const double secs = median(over_seeds(a, defense(), [](const CellResult& c) { return c.attack_seconds_per_example; }));
    per_step.push_back(secs / double(n));
  }
  const auto [lo, hi] = std::minmax_element(per_step.begin(), per_step.end());
  const double spread = *hi / *lo;
  const bool pass = non_decreasing(fids) && spread <= 2.0;
  return {pass, "median FID N=10/40/100 " + join(fids) + "; attack seconds per example per step " +
                    join(per_step, "%.2e") + ", max/min " + fmt("%.2f", spread) + " (<= 2)"};
}

Outcome Acceptance::budget_ablation() {
  std::vector<double> fids, precs;
  for (int e : {2, 4, 8, 16}) {
    fids.push_back(median_fid(attack(AttackKind::advdm, e)));
    precs.push_back(median_precision(attack(AttackKind::advdm, e)));
  }
  return {non_decreasing(fids) && non_increasing(precs),
          "eps 2/4/8/16 /255: median FID " + join(fids) + ", median precision " + join(precs)};
}

Outcome Acceptance::attack_ranking() {
  const double none = median_fid(attack(AttackKind::none));
  const double adv = median_fid(attack(AttackKind::advdm)) - none;
  if (adv <= 0) return {false, "AdvDM gap not positive"};
  const double emb = (median_fid(attack(AttackKind::embedding)) - none) / adv;
  const double pgd = (median_fid(attack(AttackKind::pgd_dm)) - none) / adv;
  const double cls = (median_fid(attack(AttackKind::pgd_classifier)) - none) / adv;
  const double tau = kRankTolerance;
  std::vector<std::string> failed;
  if (emb > 1.0 + tau || pgd > 1.0 + tau) failed.push_back("AdvDM not largest-or-tied");
  if (std::abs(emb - pgd) > tau) failed.push_back("Embedding !~ PGD(LDM)");
  if (std::min(emb, pgd) <= cls) failed.push_back("PGD(classifier) not below");
  if (std::abs(cls) > tau) failed.push_back("PGD(classifier) !~ none");
  std::string why;
  for (const auto& f : failed) why += "; " + f;
  return {failed.empty(), "FID gaps / AdvDM gap " + fmt("%.3f", adv) + ": AdvDM 1, Embedding " + fmt("%.2f", emb) +
                              ", PGD(LDM) " + fmt("%.2f", pgd) + ", PGD(classifier) " + fmt("%.2f", cls) +
                              " (tolerance " + fmt("%.2f", tau) + ")" + why};
}

Outcome Acceptance::equivalence() {
  const auto& data = models_.data.inputs;
  RngStream pick(303);
  std::size_t identical = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t rows = std::size_t(pick.uniform_int(1, 4));
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < rows; ++r) idx.push_back(std::size_t(pick.uniform_int(0, std::int64_t(data.rows()) - 1)));
    const Tensor x0 = gather_rows(data, idx);
    AttackConfig cfg;
    cfg.n_steps = 1;
    const std::uint64_t seed = pick.next_u64();
    RngStream ra(seed), rb(seed);
    const Tensor cond = models_.denoiser().null_condition();
    const Tensor a = advdm::advdm(models_.denoiser(), models_.schedule, &*models_.codec, x0, cond, cfg, ra);
    const Tensor b = pgd_dm(models_.denoiser(), models_.schedule, &*models_.codec, x0, cond, cfg, rb);
    identical += bitwise_equal(a, b) ? 1 : 0;
    equivalence_budgets_.push_back(verify_budget(x0, a, cfg.epsilon));
    equivalence_budgets_.push_back(verify_budget(x0, b, cfg.epsilon));
  }
  return {identical == 50, std::to_string(identical) + "/50 bit-identical"};
}

Outcome Acceptance::defense_partiality() {
  const double clean = median_fid(attack(AttackKind::none));
  const double undefended = median_fid(attack(AttackKind::advdm));
  bool pass = clean < undefended;
  std::string detail = "clean " + fmt("%.3f", clean) + ", undefended " + fmt("%.3f", undefended);
  for (auto kind : {DefenseKind::jpeg_like, DefenseKind::tvm, DefenseKind::diffpure}) {
    const double d = median_fid(attack(AttackKind::advdm), defense(kind));
    const bool ok = clean < d && d < undefended;
    pass = pass && ok;
    detail += ", " + std::string(to_string(kind)) + " " + fmt("%.3f", d) + (ok ? "" : " (out of order)");
  }
  return {pass, detail + " (clean < defended < undefended)"};
}

Outcome Acceptance::metric_oracles() {
  RngStream rng(404);
  std::size_t pr_equal = 0, pr_total = 0;
  for (int i = 0; i < 10; ++i) {
    const Tensor real = gaussian(rng, {200, 4});
    Tensor gen = gaussian(rng, {200, 4});
    for (auto& v : gen.values()) v = 0.8f * v + 0.3f;
    for (std::size_t k : {1, 3, 5}) {
      const auto fast = precision_recall(FeatureBatch{real, FeatureSource::real},
                                         FeatureBatch{gen, FeatureSource::generated}, k);
      const auto bf = brute_force_pr(real, gen, k);
      pr_equal += (fast.precision == bf.precision && fast.recall == bf.recall) ? 1 : 0;
      ++pr_total;
    }
  }
  const std::size_t n = 10000;
  const double m = 1.0;
  const Tensor a = gaussian(rng, {n, 1});
  Tensor b = gaussian(rng, {n, 1});
  for (auto& v : b.values()) v += float(m);
  const double fd = frechet(a, b);
  const double fd_rel = std::abs(fd - m * m) / (m * m);
  const Tensor c = gaussian(rng, {500, 8});
  const double self = frechet(c, c);
  const bool pass = pr_equal == pr_total && fd_rel < 0.1 && std::abs(self) < 1e-6;
  return {pass, "P/R equal to brute force " + std::to_string(pr_equal) + "/" + std::to_string(pr_total) +
                    " (n=200, k=1/3/5); 1-D Frechet " + fmt("%.4f", fd) + " vs " + fmt("%.1f", m * m) +
                    " (rel " + fmt("%.3f", fd_rel) + " < 0.1); frechet(a,a) " + fmt("%.1e", self)};
}

Outcome Acceptance::budget_sweep() {
  std::size_t checked = 0, failed = 0;
  for (const auto& [k, c] : cells_) {
    if (c.attack.kind == AttackKind::none) continue;
    ++checked;
    failed += c.budget.pass ? 0 : 1;
  }
  for (const auto& b : equivalence_budgets_) {
    ++checked;
    failed += b.pass ? 0 : 1;
  }
  return {checked > 0 && failed == 0, std::to_string(checked - failed) + "/" + std::to_string(checked) +
                                          " attacked cells and equivalence outputs within budget and range"};
}

Outcome Acceptance::determinism() {
  const RunResult& first = criterion4_run();
  ExperimentConfig c = base_;
  c.attacks = {attack(AttackKind::none), attack(AttackKind::advdm)};
  c.defenses = {defense()};
  c.seeds = kSeeds;
  c.output_dir = work_ / "c12";
  fs::remove_all(c.output_dir);  // retrain every model from scratch
  const TrainedModels fresh = prepare_models(c, true);
  const RunResult second = run_scenario(c, fresh);
  const bool same = first.manifest.same_hashes(second.manifest);
  std::size_t hashes = first.manifest.checkpoint_hashes.size() + first.manifest.artifact_hashes.size() +
                       first.manifest.cell_hashes.size() + 1;
  return {same, std::to_string(hashes) + " hashes (config, checkpoints, artifacts, cells) " +
                    (same ? "identical" : "differ") + " after retraining and rerunning"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"advdm acceptance run"};
  std::string work_dir = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "Directory for checkpoints and run outputs");
  std::vector<int> expected_red;
  app.add_option("--criteria", only, "Run only these criteria (1-12)")->check(CLI::Range(1, 12));
  app.add_option("--expect-fail", expected_red, "Known-red criteria that do not affect the exit code")
      ->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  Acceptance acc{fs::path(work_dir)};
  acc.prepare();

  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0: none
    Outcome (Acceptance::*run)();
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", 60, &Acceptance::gradients},
      {2, "forward-process fidelity", 60, &Acceptance::forward_moments},
      {3, "generative sanity", 300, &Acceptance::generative_sanity},
      {4, "core attack", 900, &Acceptance::core_attack},
      {5, "sampling-step ablation", 1800, &Acceptance::step_ablation},
      {6, "budget ablation", 1800, &Acceptance::budget_ablation},
      {7, "attack ranking", 1200, &Acceptance::attack_ranking},
      {8, "N=1 equivalence", 0, &Acceptance::equivalence},
      {9, "defense partiality", 1200, &Acceptance::defense_partiality},
      {10, "metric oracles", 0, &Acceptance::metric_oracles},
      {11, "budget safety sweep", 0, &Acceptance::budget_sweep},
      {12, "determinism", 0, &Acceptance::determinism},
  };
  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> known_red(expected_red.begin(), expected_red.end());
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = (acc.*c.run)();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = Acceptance::seconds_since(start);
    if (c.limit_seconds > 0 && secs > c.limit_seconds) {
      o.pass = false;
      o.detail += "; over the " + std::to_string(int(c.limit_seconds)) + "s limit";
    }
    const bool red_ok = known_red.count(c.id) > 0;
    failures += (o.pass || red_ok) ? 0 : 1;
    if (red_ok) o.detail += o.pass ? " (listed as expected to fail, now passing)" : " (expected, see ledger)";
    std::printf("criterion %2d %s  %-26s %s [%.1fs]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
