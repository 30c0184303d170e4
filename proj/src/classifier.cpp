// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "advdm/errors.hpp"

namespace advdm {

namespace {
std::vector<std::size_t> widths(const ClassifierConfig& c) { return {c.input_dim, c.hidden, c.hidden, c.num_classes}; }
}  // namespace

Classifier::Classifier(const ClassifierConfig& config, RngStream& init) : config_(config) {
  if (config.num_classes < 2) throw ConfigError("classifier needs at least two classes");
  net_ = Mlp(widths(config_), Activation::silu, Activation::identity, params_, "cls", init);
}

Classifier Classifier::from_parameters(const ClassifierConfig& config, ParameterSet params) {
  Classifier c;
  c.config_ = config;
  c.params_ = std::move(params);
  c.net_ = Mlp::attach(widths(config), Activation::silu, Activation::identity, c.params_, "cls");
  return c;
}

Var Classifier::logits(GradientTape& tape, Var x) const {
  return logits_bound(BoundParameters::as_constants(tape, params_), x);
}

Var Classifier::logits_bound(const BoundParameters& bound, Var x) const {
  if (x.tape->value(x).cols() != config_.input_dim) throw DimensionError("classifier input width mismatch");
  return net_.forward(bound, x);
}

std::vector<int> Classifier::predict(const Tensor& x) const {
  GradientTape tape;
  const Tensor l = tape.value(logits(tape, tape.constant(x)));
  std::vector<int> out(l.rows());
  for (std::size_t r = 0; r < l.rows(); ++r) {
    const auto row = l.row_span(r);
    out[r] = int(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(const Classifier& model, const Tensor& data, std::span<const int> labels) {
  const auto pred = model.predict(data);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
  return pred.empty() ? 0.0 : double(hit) / double(pred.size());
}

ClassifierTrainResult train_classifier(const Tensor& data, std::span<const int> labels, const ClassifierConfig& config,
                                       const ClassifierTrainConfig& train, RngStream& rng) {
  if (data.rows() == 0) throw PreconditionError("train_classifier: empty dataset");
  if (labels.size() != data.rows()) throw PreconditionError("train_classifier: one label per example required");
  Classifier model(config, rng);
  Adam adam(AdamConfig{train.learning_rate});
  std::vector<float> curve;
  for (std::size_t step = 0; step < train.steps; ++step) {
    std::vector<std::size_t> rows(train.batch);
    std::vector<int> y(train.batch);
    for (std::size_t i = 0; i < train.batch; ++i) {
      rows[i] = std::size_t(rng.uniform_int(0, std::int64_t(data.rows()) - 1));
      y[i] = labels[rows[i]];
    }
    GradientTape tape;
    const BoundParameters bound = BoundParameters::as_leaves(tape, model.parameters());
    const Var loss = ops::cross_entropy(model.logits_bound(bound, tape.constant(gather_rows(data, rows))), y);
    const float value = tape.value(loss)[0];
    if (!std::isfinite(value)) throw TrainingDivergedError(step, "classifier training diverged");
    adam.step(model.parameters(), tape.gradients(loss, bound.vars()));
    curve.push_back(value);
  }
  const double acc = accuracy(model, data, labels);
  return ClassifierTrainResult{std::move(model), std::move(curve), acc};
}

}  // namespace advdm
