// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>

#include "advdm/dataset.hpp"
#include "advdm/diffusion.hpp"
#include "advdm/errors.hpp"
#include "advdm/metrics.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace advdm;
using advdm::testing::central_difference;
using advdm::testing::l_dm_double;
using advdm::testing::mixture_models;
using advdm::testing::relative_error;

namespace {

/// Returns a fixed tensor regardless of its inputs.
class FixedPredictor : public NoisePredictor {
 public:
  explicit FixedPredictor(Tensor out) : out_(std::move(out)) {}
  std::size_t data_dim() const override { return out_.cols(); }
  std::size_t cond_dim() const override { return 1; }
  Var predict(GradientTape& tape, Var, std::span<const int>, Var) const override { return tape.constant(out_); }

 private:
  Tensor out_;
};

double mean_of(const std::vector<float>& v, std::size_t begin, std::size_t end) {
  double s = 0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return s / double(end - begin);
}

}  // namespace

TEST_CASE("linear schedule invariants", "[diffusion][schedule]") {
  const auto s = DiffusionSchedule::linear();
  REQUIRE(s.steps() == 100);
  CHECK(s.beta(1) > 0.0);
  CHECK(s.beta(1) <= s.beta(100));
  CHECK(s.beta(100) < 1.0);
  double prod = 1.0;
  for (std::size_t t = 1; t <= s.steps(); ++t) {
    prod *= s.alpha(t);
    CHECK(std::abs(s.alpha_bar(t) - prod) < 1e-6);
    if (t > 1) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  }
  CHECK_THROWS_AS(s.check_step(0), StepError);
  CHECK_THROWS_AS(s.check_step(101), StepError);
  CHECK_THROWS_AS(DiffusionSchedule::linear(10, 0.5, 0.1), ConfigError);
}

TEST_CASE("forward_diffuse limits", "[diffusion][forward]") {
  RngStream rng(1);
  const Tensor x0 = gaussian(rng, {4, 3});
  const Tensor eps = gaussian(rng, {4, 3});
  CHECK(bitwise_equal(forward_diffuse(x0, 1.0, eps), x0));
  CHECK(bitwise_equal(forward_diffuse(x0, 0.0, eps), eps));
  const auto s = DiffusionSchedule::linear();
  CHECK_THROWS_AS(forward_diffuse(x0, std::size_t(0), eps, s), StepError);
  CHECK_THROWS_AS(forward_diffuse(x0, std::size_t(101), eps, s), StepError);
  CHECK_THROWS_AS(forward_diffuse(x0, std::size_t(3), Tensor({4, 2}), s), DimensionError);
}

TEST_CASE("forward_diffuse Monte-Carlo moments", "[diffusion][forward]") {
  const auto s = DiffusionSchedule::linear();
  const Tensor x0({1, 2}, {0.7f, -1.3f});
  const std::size_t n = 10000;
  RngStream rng(77);
  for (std::size_t t : {1, 10, 50, 100}) {
    const double ab = s.alpha_bar(t);
    const Tensor xt = forward_diffuse(repeat_row(x0, n), t, gaussian(rng, {n, 2}), s);
    for (std::size_t d = 0; d < 2; ++d) {
      double m = 0, v = 0;
      for (std::size_t i = 0; i < n; ++i) m += xt.at(i, d);
      m /= double(n);
      for (std::size_t i = 0; i < n; ++i) v += (xt.at(i, d) - m) * (xt.at(i, d) - m);
      v /= double(n - 1);
      const double var = 1.0 - ab;
      CHECK(std::abs(m - std::sqrt(ab) * x0[d]) <= 3.0 * std::sqrt(var / double(n)));
      CHECK(std::abs(v - var) <= 3.0 * var * std::sqrt(2.0 / double(n - 1)));
    }
  }
}

TEST_CASE("l_dm with oracle and zero predictors", "[diffusion][loss]") {
  const auto s = DiffusionSchedule::linear();
  RngStream rng(3);
  const Tensor x0 = gaussian(rng, {1, 4});
  const Tensor eps = gaussian(rng, {1, 4});
  const Tensor cond({1, 1}, 0.0f);
  CHECK(l_dm(FixedPredictor(eps), x0, cond, 30, eps, s) == 0.0f);
  const float zero_loss = l_dm(FixedPredictor(Tensor({1, 4}, 0.0f)), x0, cond, 30, eps, s);
  CHECK(zero_loss == Catch::Approx(squared_norm(eps)).epsilon(1e-6));
  CHECK(l_dm(FixedPredictor(gaussian(rng, {1, 4})), x0, cond, 30, eps, s) > 0.0f);
}

TEST_CASE("l_dm input gradient matches central differences", "[diffusion][loss][fd]") {
  DenoiserConfig dc;
  dc.data_dim = 2;
  dc.cond_dim = 2;
  dc.time_dim = 4;
  dc.hidden = 2;
  dc.depth = 1;
  dc.num_classes = 2;
  RngStream init(9);
  const Denoiser model(dc, init);
  const auto s = DiffusionSchedule::linear();
  RngStream rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x0 = gaussian(rng, {3, 2});
    const Tensor eps = gaussian(rng, {3, 2});
    const Tensor cond = gaussian(rng, {1, 2});
    const std::size_t t = std::size_t(rng.uniform_int(1, 100));
    const std::vector<int> steps(3, int(t));
    const Tensor g = gradient(
        [&](GradientTape& tape, Var x) {
          return diffusion_loss(tape, model, x, tape.constant(cond), steps, tape.constant(eps), s);
        },
        x0);
    CHECK(std::abs(l_dm_double(model, x0, cond, t, eps, s) - l_dm(model, x0, cond, t, eps, s)) < 1e-4);
    const auto f = [&](const Tensor& x) { return l_dm_double(model, x, cond, t, eps, s); };
    CHECK(relative_error(g, central_difference(f, x0, 1e-3f)) < 1e-3);
  }
}

TEST_CASE("drawn loss samples are constructed exactly", "[diffusion][loss]") {
  const auto& m = mixture_models();
  RngStream rng(4);
  const Tensor x0 = slice_rows(m.data.inputs, 0, 16);
  const auto sample = draw_loss_sample(m.denoiser(), m.schedule, x0, m.denoiser().null_condition(), rng);
  REQUIRE(sample.t.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    const Tensor expect =
        forward_diffuse(slice_rows(x0, i, 1), std::size_t(sample.t[i]), slice_rows(sample.eps, i, 1), m.schedule);
    CHECK(bitwise_equal(expect, slice_rows(sample.x_t, i, 1)));
  }
  CHECK(sample.loss >= 0.0f);
}

TEST_CASE("denoiser training halves the loss on a 2-component mixture", "[diffusion][train]") {
  const Dataset data = make_gaussian_mixture(2, 512, 2.0, 0.1, 1);
  const auto sched = DiffusionSchedule::linear();
  for (std::uint64_t seed : {1, 2, 3}) {
    DenoiserConfig dc;
    dc.num_classes = 2;
    RngStream init(seed), rng(seed + 100);
    const auto r = train_denoiser(Denoiser(dc, init), data.inputs, data.labels, sched, DiffusionTrainConfig{}, rng);
    const double initial = mean_of(r.loss_curve, 0, 20);
    INFO("seed " << seed << " initial " << initial << " final " << r.final_loss);
    CHECK(r.final_loss < 0.5 * initial);
  }
}

TEST_CASE("denoiser training preconditions", "[diffusion][train]") {
  DenoiserConfig dc;
  RngStream init(1), rng(2);
  const std::vector<int> none;
  CHECK_THROWS_AS(train_denoiser(Denoiser(dc, init), Tensor({0, 2}), none, DiffusionSchedule::linear(),
                                 DiffusionTrainConfig{}, rng),
                  PreconditionError);
  Tensor bad({4, 2}, 0.0f);
  bad[3] = std::numeric_limits<float>::quiet_NaN();
  const std::vector<int> labels(4, 0);
  DiffusionTrainConfig tc;
  tc.steps = 50;
  tc.batch = 8;
  CHECK_THROWS_AS(train_denoiser(Denoiser(dc, init), bad, labels, DiffusionSchedule::linear(), tc, rng),
                  TrainingDivergedError);
}

TEST_CASE("zero learning rate leaves the loss curve flat", "[diffusion][train]") {
  const Dataset data = make_gaussian_mixture(2, 256, 2.0, 0.1, 3);
  DenoiserConfig dc;
  dc.num_classes = 2;
  RngStream init(5), rng(6);
  DiffusionTrainConfig tc;
  tc.steps = 400;
  tc.learning_rate = 0.0f;
  const auto r = train_denoiser(Denoiser(dc, init), data.inputs, data.labels, DiffusionSchedule::linear(), tc, rng);
  // Welch t statistic between the two halves of the curve.
  const std::size_t h = tc.steps / 2;
  const double m1 = mean_of(r.loss_curve, 0, h), m2 = mean_of(r.loss_curve, h, tc.steps);
  double v1 = 0, v2 = 0;
  for (std::size_t i = 0; i < h; ++i) v1 += (r.loss_curve[i] - m1) * (r.loss_curve[i] - m1);
  for (std::size_t i = h; i < tc.steps; ++i) v2 += (r.loss_curve[i] - m2) * (r.loss_curve[i] - m2);
  v1 /= double(h - 1);
  v2 /= double(h - 1);
  const double tstat = (m1 - m2) / std::sqrt(v1 / double(h) + v2 / double(h));
  CHECK(std::abs(tstat) < 2.6);
}

TEST_CASE("sampling recovers a single Gaussian's mean", "[diffusion][sample]") {
  const Dataset data = make_gaussian_mixture(1, 1024, 1.5, std::sqrt(0.1), 4);
  DenoiserConfig dc;
  dc.num_classes = 1;
  RngStream init(7), rng(8);
  DiffusionTrainConfig tc;
  tc.steps = 2000;
  const auto sched = DiffusionSchedule::linear();
  const auto r = train_denoiser(Denoiser(dc, init), data.inputs, data.labels, sched, tc, rng);
  RngStream srng(9);
  const Tensor x = sample(r.model, sched, r.model.null_condition(), srng, 1000);
  const Tensor mu = column_mean(x);
  CHECK(std::abs(mu[0] - 1.5f) < 0.1f);
  CHECK(std::abs(mu[1]) < 0.1f);
}

TEST_CASE("sampling is deterministic and handles empty batches", "[diffusion][sample]") {
  const auto& m = mixture_models();
  RngStream a(12), b(12);
  const Tensor c = m.denoiser().class_embedding(0);
  CHECK(bitwise_equal(sample(m.denoiser(), m.schedule, c, a, 64), sample(m.denoiser(), m.schedule, c, b, 64)));
  CHECK(sample(m.denoiser(), m.schedule, c, a, 0).rows() == 0);
}

TEST_CASE("unconditional samples cover both mixture modes", "[diffusion][sample]") {
  const auto& m = mixture_models();
  RngStream rng(13);
  const Tensor x = sample(m.denoiser(), m.schedule, m.denoiser().null_condition(), rng, 1000);
  const Tensor mu0 = column_mean(m.data.class_inputs(0)), mu1 = column_mean(m.data.class_inputs(1));
  std::size_t first = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double d0 = std::hypot(x.at(i, 0) - mu0[0], x.at(i, 1) - mu0[1]);
    const double d1 = std::hypot(x.at(i, 0) - mu1[0], x.at(i, 1) - mu1[1]);
    if (d0 < d1) ++first;
  }
  CHECK(first >= 400);
  CHECK(first <= 600);
}

TEST_CASE("img2img at the smallest strength stays near the source", "[diffusion][img2img]") {
  const auto& m = mixture_models();
  RngStream rng(14);
  const Tensor src = slice_rows(m.data.inputs, 0, 200);
  REQUIRE(strength_to_step(0.004, m.schedule) == 1);
  const Tensor out = img2img(m.denoiser(), m.schedule, m.denoiser().class_embedding(m.data.labels[0]), src, 0.004, rng);
  CHECK(mean_abs_diff(out, src) < 0.05);
}

TEST_CASE("img2img at full strength matches full conditional sampling", "[diffusion][img2img]") {
  const auto& m = mixture_models();
  const Tensor source = m.data.class_inputs(1);
  const Tensor cond = m.denoiser().class_embedding(0);
  RngStream a(15), b(16);
  const Tensor full = img2img(m.denoiser(), m.schedule, cond, source, 1.0, a);
  const Tensor fresh = sample(m.denoiser(), m.schedule, cond, b, source.rows());
  const double between = frechet(full, fresh);
  CHECK(between < frechet(full, source));
  CHECK(between < frechet(fresh, source));
}

TEST_CASE("img2img determinism and strength validation", "[diffusion][img2img]") {
  const auto& m = mixture_models();
  const Tensor src = slice_rows(m.data.inputs, 0, 10);
  const Tensor c = m.denoiser().class_embedding(0);
  RngStream a(17), b(17);
  CHECK(bitwise_equal(img2img(m.denoiser(), m.schedule, c, src, 0.5, a), img2img(m.denoiser(), m.schedule, c, src, 0.5, b)));
  CHECK(strength_to_step(0.5, m.schedule) == 50);
  CHECK_THROWS_AS(img2img(m.denoiser(), m.schedule, c, src, 0.0, a), ConfigError);
  CHECK_THROWS_AS(img2img(m.denoiser(), m.schedule, c, src, 1.5, a), ConfigError);
}

TEST_CASE("diffpure at t_star = 1 stays within the noise floor", "[diffusion][diffpure]") {
  const auto& m = mixture_models();
  RngStream rng(18);
  const Tensor x = slice_rows(m.data.inputs, 0, 200);
  CHECK(mean_abs_diff(diffpure(m.denoiser(), m.schedule, x, 1, rng), x) < 0.1);
}

TEST_CASE("diffpure at t_star = T behaves like fresh sampling", "[diffusion][diffpure]") {
  // Latent shapes model: its distances sit well above the finite-sample floor.
  const auto& m = advdm::testing::shapes_models();
  const Tensor z = m.to_model_space(m.data.inputs);
  RngStream a(19), b(20);
  const Tensor purified = diffpure(m.denoiser(), m.schedule, z, m.schedule.steps(), a);
  const Tensor fresh = sample(m.denoiser(), m.schedule, m.denoiser().null_condition(), b, z.rows());
  const double fp = frechet(purified, z), ff = frechet(fresh, z);
  INFO("purified " << fp << " fresh " << ff);
  CHECK(fp <= 2.0 * ff);
  // The 1e-4..0.02 schedule keeps alpha_bar_T near 0.37, so x_T still carries the source and
  // purified rows sit closer to the data than fresh samples; the converse bound does not hold.
  CHECK(m.schedule.alpha_bar(m.schedule.steps()) > 0.3);
  CHECK(fp < ff);
}

TEST_CASE("diffpure determinism and step validation", "[diffusion][diffpure]") {
  const auto& m = mixture_models();
  const Tensor x = slice_rows(m.data.inputs, 0, 10);
  RngStream a(21), b(21);
  CHECK(bitwise_equal(diffpure(m.denoiser(), m.schedule, x, 25, a), diffpure(m.denoiser(), m.schedule, x, 25, b)));
  CHECK_THROWS_AS(diffpure(m.denoiser(), m.schedule, x, 0, a), StepError);
  CHECK_THROWS_AS(diffpure(m.denoiser(), m.schedule, x, 101, a), StepError);
}
