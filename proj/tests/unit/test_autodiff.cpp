// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "advdm/autodiff.hpp"
#include "advdm/errors.hpp"
#include "advdm/nn.hpp"
#include "advdm/rng.hpp"
#include "oracles.hpp"

using namespace advdm;
using advdm::testing::central_difference;
using advdm::testing::relative_error;

namespace {

using UnaryOp = std::function<Var(GradientTape&, Var)>;

/// Projects op(x) onto fixed random weights so every output element contributes.
double project(GradientTape& tape, Var y, std::uint64_t seed) {
  RngStream rng(seed);
  const Tensor& yv = tape.value(y);
  const Tensor w = gaussian(rng, yv.shape());
  return tape.value(ops::sum(ops::mul(y, tape.constant(w))))[0];
}

void check_unary(const char* name, const UnaryOp& op, const Tensor& x0) {
  INFO(name);
  const auto f = [&](const Tensor& x) {
    GradientTape tape;
    return project(tape, op(tape, tape.constant(x)), 99);
  };
  GradientTape tape;
  const Var x = tape.leaf(x0);
  RngStream rng(99);
  const Var y = op(tape, x);
  const Tensor w = gaussian(rng, tape.value(y).shape());
  const Tensor g = tape.grad_wrt(ops::sum(ops::mul(y, tape.constant(w))), x);
  CHECK(relative_error(g, central_difference(f, x0, 1e-3f)) < 1e-3);
}

}  // namespace

TEST_CASE("gradient of sum of squares", "[autodiff]") {
  GradientTape tape;
  const Var x = tape.leaf(Tensor({2}, {1.0f, -2.0f}));
  const Tensor g = tape.grad_wrt(ops::sum(ops::square(x)), x);
  CHECK(g[0] == 2.0f);
  CHECK(g[1] == -4.0f);
  CHECK(tape.empty());
}

TEST_CASE("gradient of a function constant in the leaf is zero", "[autodiff]") {
  GradientTape tape;
  const Var x = tape.leaf(Tensor({3}, {1, 2, 3}));
  const Var c = tape.constant(Tensor({3}, {4, 5, 6}));
  const Tensor g = tape.grad_wrt(ops::sum(ops::square(c)), x);
  CHECK(bitwise_equal(g, Tensor({3}, 0.0f)));
}

TEST_CASE("missing leaf and non-scalar output are rejected", "[autodiff]") {
  GradientTape tape;
  const Var x = tape.leaf(Tensor({2}, {1, 2}));
  const Var c = tape.constant(Tensor({2}, {1, 2}));
  CHECK_THROWS_AS(tape.grad_wrt(ops::sum(ops::mul(x, c)), c), MissingLeafError);

  GradientTape other;
  const Var y = other.leaf(Tensor({2}, {1, 2}));
  GradientTape tape2;
  const Var z = tape2.leaf(Tensor({2}, {3, 4}));
  CHECK_THROWS_AS(tape2.grad_wrt(ops::sum(z), y), MissingLeafError);

  GradientTape tape3;
  const Var v = tape3.leaf(Tensor({2}, {1, 2}));
  CHECK_THROWS_AS(tape3.grad_wrt(ops::square(v), v), DimensionError);
}

TEST_CASE("handles from a cleared tape are invalid", "[autodiff]") {
  GradientTape tape;
  const Var x = tape.leaf(Tensor({1}, {2.0f}));
  (void)tape.grad_wrt(ops::sum(ops::square(x)), x);
  CHECK_THROWS_AS(tape.value(x), MissingLeafError);
}

TEST_CASE("two-layer network gradient matches central differences", "[autodiff][fd]") {
  RngStream init(17);
  ParameterSet params;
  const Mlp net({3, 6, 2}, Activation::tanh, Activation::identity, params, "net", init);
  RngStream rng(18);
  const Tensor x0 = gaussian(rng, {4, 3});
  const auto loss = [&](GradientTape& tape, Var x) {
    const auto bound = BoundParameters::as_constants(tape, params);
    return ops::sum(ops::square(net.forward(bound, x)));
  };
  const Tensor g = gradient(loss, x0);
  const auto f = [&](const Tensor& x) {
    GradientTape tape;
    return double(tape.value(loss(tape, tape.constant(x)))[0]);
  };
  CHECK(relative_error(g, central_difference(f, x0, 1e-3f)) < 1e-3);

  // Parameter gradients through the same mechanism.
  GradientTape tape;
  const auto bound = BoundParameters::as_leaves(tape, params);
  const Var out = ops::sum(ops::square(net.forward(bound, tape.constant(x0))));
  const auto grads = tape.gradients(out, bound.vars());
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto fp = [&](const Tensor& value) {
      ParameterSet copy = params;
      copy[p] = value;
      const Mlp attached = Mlp::attach({3, 6, 2}, Activation::tanh, Activation::identity, copy, "net");
      GradientTape t;
      const auto b = BoundParameters::as_constants(t, copy);
      return double(t.value(ops::sum(ops::square(attached.forward(b, t.constant(x0)))))[0]);
    };
    INFO(params.name(p));
    CHECK(relative_error(grads[p], central_difference(fp, params[p], 1e-3f)) < 1e-3);
  }
}

TEST_CASE("every primitive matches central differences", "[autodiff][fd]") {
  RngStream rng(5);
  const Tensor a = gaussian(rng, {3, 4});
  const Tensor b = gaussian(rng, {3, 4});
  const Tensor w = gaussian(rng, {4, 2});
  const Tensor bias = gaussian(rng, {1, 2});
  const Tensor row = gaussian(rng, {1, 4});
  const Tensor col = gaussian(rng, {3, 1});
  Tensor positive = uniform(rng, {3, 4}, 0.5f, 2.0f);

  check_unary("affine.input", [&](GradientTape& t, Var x) { return ops::affine(x, t.constant(w), t.constant(bias)); }, a);
  check_unary("affine.weights", [&](GradientTape& t, Var x) { return ops::affine(t.constant(a), x, t.constant(bias)); }, w);
  check_unary("affine.bias", [&](GradientTape& t, Var x) { return ops::affine(t.constant(a), t.constant(w), x); }, bias);
  check_unary("matmul.a", [&](GradientTape& t, Var x) { return ops::matmul(x, t.constant(w)); }, a);
  check_unary("matmul.b", [&](GradientTape& t, Var x) { return ops::matmul(t.constant(a), x); }, w);
  check_unary("add", [&](GradientTape& t, Var x) { return ops::add(x, t.constant(b)); }, a);
  check_unary("sub.lhs", [&](GradientTape& t, Var x) { return ops::sub(x, t.constant(b)); }, a);
  check_unary("sub.rhs", [&](GradientTape& t, Var x) { return ops::sub(t.constant(b), x); }, a);
  check_unary("mul", [&](GradientTape& t, Var x) { return ops::mul(x, t.constant(b)); }, a);
  check_unary("mul.self", [&](GradientTape&, Var x) { return ops::mul(x, x); }, a);
  check_unary("scale", [&](GradientTape&, Var x) { return ops::scale(x, -2.5f); }, a);
  check_unary("add_scalar", [&](GradientTape&, Var x) { return ops::square(ops::add_scalar(x, 0.3f)); }, a);
  check_unary("add_row.a", [&](GradientTape& t, Var x) { return ops::add_row(x, t.constant(row)); }, a);
  check_unary("add_row.row", [&](GradientTape& t, Var x) { return ops::add_row(t.constant(a), x); }, row);
  check_unary("scale_rows.a", [&](GradientTape& t, Var x) { return ops::scale_rows(x, t.constant(col)); }, a);
  check_unary("scale_rows.s", [&](GradientTape& t, Var x) { return ops::scale_rows(t.constant(a), x); }, col);
  check_unary("square", [&](GradientTape&, Var x) { return ops::square(x); }, a);
  check_unary("silu", [&](GradientTape&, Var x) { return ops::silu(x); }, a);
  check_unary("tanh", [&](GradientTape&, Var x) { return ops::tanh(x); }, a);
  check_unary("sigmoid", [&](GradientTape&, Var x) { return ops::sigmoid(x); }, a);
  check_unary("smooth_abs", [&](GradientTape&, Var x) { return ops::smooth_abs(x, 0.1f); }, a);
  check_unary("sqrt", [&](GradientTape&, Var x) { return ops::sqrt(x); }, positive);
  check_unary("sum", [&](GradientTape&, Var x) { return ops::sum(ops::square(x)); }, a);
  check_unary("mean", [&](GradientTape&, Var x) { return ops::mean(ops::square(x)); }, a);
  check_unary("row_sum", [&](GradientTape&, Var x) { return ops::row_sum(ops::square(x)); }, a);
  check_unary("concat_cols", [&](GradientTape& t, Var x) { return ops::concat_cols({t.constant(b), x, x}); }, a);
  const std::vector<std::size_t> rows{2, 0, 2, 1};
  check_unary("gather_rows", [&](GradientTape&, Var x) { return ops::gather_rows(x, rows); }, a);
  const std::vector<std::size_t> cols{3, 3, 0};
  check_unary("gather_cols", [&](GradientTape&, Var x) { return ops::gather_cols(x, cols); }, a);
  check_unary("broadcast_rows", [&](GradientTape&, Var x) { return ops::broadcast_rows(x, 5); }, row);
  const std::vector<int> labels{0, 3, 1};
  check_unary("cross_entropy", [&](GradientTape&, Var x) { return ops::cross_entropy(x, labels); }, a);
}

TEST_CASE("backward replay is deterministic", "[autodiff]") {
  RngStream init(21);
  ParameterSet params;
  const Mlp net({5, 16, 16, 3}, Activation::silu, Activation::identity, params, "net", init);
  RngStream rng(22);
  const Tensor x0 = gaussian(rng, {8, 5});
  const auto run = [&] {
    GradientTape tape;
    const auto bound = BoundParameters::as_leaves(tape, params);
    const Var x = tape.leaf(x0);
    const Var out = ops::mean(ops::square(net.forward(bound, x)));
    std::vector<Var> leaves(bound.vars().begin(), bound.vars().end());
    leaves.push_back(x);
    return tape.gradients(out, leaves);
  };
  const auto g1 = run();
  const auto g2 = run();
  REQUIRE(g1.size() == g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(bitwise_equal(g1[i], g2[i]));
}

TEST_CASE("adam moves parameters against the gradient", "[nn]") {
  ParameterSet p;
  p.add("w", Tensor({2}, {1.0f, -1.0f}));
  Adam adam(AdamConfig{0.1f});
  const std::vector<Tensor> grads{Tensor({2}, {1.0f, -1.0f})};
  adam.step(p, grads);
  CHECK(p[0][0] < 1.0f);
  CHECK(p[0][1] > -1.0f);
  CHECK_THROWS_AS(p.index_of("missing"), FormatError);
}
