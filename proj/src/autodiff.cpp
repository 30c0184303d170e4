// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "advdm/errors.hpp"

namespace advdm {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) { return ConstMap(t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())); }
MutMap as_matrix(Tensor& t) { return MutMap(t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())); }

GradientTape& shared_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw Error("operands recorded on different tapes");
  return *a.tape;
}

template <class Forward, class Derivative>
Var unary(Var a, Forward f, Derivative dfdx) {
  GradientTape& tape = *a.tape;
  const Tensor& x = tape.value(a);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t pa = tape.node_of(a);
  return tape.record(std::move(y), {a}, [pa, dfdx](GradientTape& t, std::size_t self) {
    Tensor* ga = t.grad_slot(pa);
    if (!ga) return;
    const Tensor& xv = t.node_value(pa);
    const Tensor& yv = t.node_value(self);
    const Tensor& gy = t.node_grad(self);
    for (std::size_t i = 0; i < xv.size(); ++i) (*ga)[i] += gy[i] * dfdx(xv[i], yv[i]);
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// GradientTape

Var GradientTape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), nullptr, true, true});
  return Var{this, std::uint32_t(nodes_.size() - 1), generation_};
}

Var GradientTape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), nullptr, false, false});
  return Var{this, std::uint32_t(nodes_.size() - 1), generation_};
}

void GradientTape::check(Var v) const {
  if (v.tape != this || v.generation != generation_ || v.index >= nodes_.size()) {
    throw MissingLeafError("variable is not recorded on this tape");
  }
}

const Tensor& GradientTape::value(Var v) const {
  check(v);
  return nodes_[v.index].value;
}

bool GradientTape::requires_grad(Var v) const {
  check(v);
  return nodes_[v.index].requires_grad;
}

std::size_t GradientTape::node_of(Var v) const {
  check(v);
  return v.index;
}

Var GradientTape::record(Tensor value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    check(p);
    needs = needs || nodes_[p.index].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Tensor(), needs ? std::move(backward) : nullptr, needs, false});
  return Var{this, std::uint32_t(nodes_.size() - 1), generation_};
}

Tensor* GradientTape::grad_slot(std::size_t node) {
  Node& n = nodes_[node];
  if (!n.requires_grad) return nullptr;
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape(), 0.0f);
  return &n.grad;
}

void GradientTape::clear() noexcept {
  nodes_.clear();
  ++generation_;
}

Tensor GradientTape::grad_wrt(Var output, Var leaf) {
  const Var leaves[] = {leaf};
  return std::move(gradients(output, leaves).front());
}

std::vector<Tensor> GradientTape::gradients(Var output, std::span<const Var> leaves) {
  check(output);
  for (const Var& l : leaves) {
    check(l);
    if (!nodes_[l.index].is_leaf) throw MissingLeafError("gradient requested for a tensor not marked as a leaf");
  }
  if (nodes_[output.index].value.size() != 1) {
    throw DimensionError("backward pass requires a scalar output, got shape " +
                         shape_string(nodes_[output.index].value.shape()));
  }
  if (nodes_[output.index].requires_grad) {
    nodes_[output.index].grad = Tensor(nodes_[output.index].value.shape(), 1.0f);
    for (std::size_t i = output.index + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
      n.backward(*this, i);
    }
  }
  std::vector<Tensor> result;
  result.reserve(leaves.size());
  for (const Var& l : leaves) {
    const Node& n = nodes_[l.index];
    result.push_back(n.grad.empty() ? Tensor(n.value.shape(), 0.0f) : n.grad);
  }
  clear();
  return result;
}

Tensor gradient(const std::function<Var(GradientTape&, Var)>& fn, const Tensor& at) {
  GradientTape tape;
  Var x = tape.leaf(at);
  Var y = fn(tape, x);
  return tape.grad_wrt(y, x);
}

// ---------------------------------------------------------------------------
// Primitives

namespace ops {

Var matmul(Var a, Var b) {
  GradientTape& tape = shared_tape(a, b);
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner extents differ " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  Tensor y({av.rows(), bv.cols()});
  as_matrix(y).noalias() = as_matrix(av) * as_matrix(bv);
  const std::size_t pa = tape.node_of(a), pb = tape.node_of(b);
  return tape.record(std::move(y), {a, b}, [pa, pb](GradientTape& t, std::size_t self) {
    const auto gy = as_matrix(t.node_grad(self));
    if (Tensor* ga = t.grad_slot(pa)) as_matrix(*ga).noalias() += gy * as_matrix(t.node_value(pb)).transpose();
    if (Tensor* gb = t.grad_slot(pb)) as_matrix(*gb).noalias() += as_matrix(t.node_value(pa)).transpose() * gy;
  });
}

Var affine(Var input, Var weights, Var bias) {
  GradientTape& tape = shared_tape(input, weights);
  shared_tape(input, bias);
  const Tensor& x = tape.value(input);
  const Tensor& w = tape.value(weights);
  const Tensor& b = tape.value(bias);
  require_rank2(x, "affine input");
  require_rank2(w, "affine weights");
  if (x.cols() != w.rows()) {
    throw DimensionError("affine: input " + shape_string(x.shape()) + " incompatible with weights " +
                         shape_string(w.shape()));
  }
  if (b.size() != w.cols()) {
    throw DimensionError("affine: bias " + shape_string(b.shape()) + " incompatible with weights " +
                         shape_string(w.shape()));
  }
  Tensor y({x.rows(), w.cols()});
  auto ym = as_matrix(y);
  ym.noalias() = as_matrix(x) * as_matrix(w);
  const Eigen::Map<const Eigen::RowVectorXf> bv(b.data(), Eigen::Index(b.size()));
  ym.rowwise() += bv;
  const std::size_t px = tape.node_of(input), pw = tape.node_of(weights), pb = tape.node_of(bias);
  return tape.record(std::move(y), {input, weights, bias}, [px, pw, pb](GradientTape& t, std::size_t self) {
    const auto gy = as_matrix(t.node_grad(self));
    if (Tensor* gx = t.grad_slot(px)) as_matrix(*gx).noalias() += gy * as_matrix(t.node_value(pw)).transpose();
    if (Tensor* gw = t.grad_slot(pw)) as_matrix(*gw).noalias() += as_matrix(t.node_value(px)).transpose() * gy;
    if (Tensor* gb = t.grad_slot(pb)) {
      Eigen::Map<Eigen::RowVectorXf> gbv(gb->data(), Eigen::Index(gb->size()));
      gbv += gy.colwise().sum();
    }
  });
}

Var add(Var a, Var b) {
  GradientTape& tape = shared_tape(a, b);
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "add");
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  const std::size_t pa = tape.node_of(a), pb = tape.node_of(b);
  return tape.record(std::move(y), {a, b}, [pa, pb](GradientTape& t, std::size_t self) {
    const Tensor& gy = t.node_grad(self);
    if (Tensor* ga = t.grad_slot(pa)) for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    if (Tensor* gb = t.grad_slot(pb)) for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i];
  });
}

Var sub(Var a, Var b) {
  GradientTape& tape = shared_tape(a, b);
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "sub");
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] - bv[i];
  const std::size_t pa = tape.node_of(a), pb = tape.node_of(b);
  return tape.record(std::move(y), {a, b}, [pa, pb](GradientTape& t, std::size_t self) {
    const Tensor& gy = t.node_grad(self);
    if (Tensor* ga = t.grad_slot(pa)) for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    if (Tensor* gb = t.grad_slot(pb)) for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] -= gy[i];
  });
}

Var mul(Var a, Var b) {
  GradientTape& tape = shared_tape(a, b);
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "mul");
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  const std::size_t pa = tape.node_of(a), pb = tape.node_of(b);
  return tape.record(std::move(y), {a, b}, [pa, pb](GradientTape& t, std::size_t self) {
    const Tensor& gy = t.node_grad(self);
    if (Tensor* ga = t.grad_slot(pa)) {
      const Tensor& bv = t.node_value(pb);
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * bv[i];
    }
    if (Tensor* gb = t.grad_slot(pb)) {
      const Tensor& av = t.node_value(pa);
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i] * av[i];
    }
  });
}

Var scale(Var a, float factor) {
  return unary(a, [factor](float x) { return factor * x; }, [factor](float, float) { return factor; });
}

Var add_scalar(Var a, float offset) {
  return unary(a, [offset](float x) { return x + offset; }, [](float, float) { return 1.0f; });
}

Var add_row(Var a, Var row) {
  GradientTape& tape = shared_tape(a, row);
  const Tensor& av = tape.value(a);
  const Tensor& rv = tape.value(row);
  require_rank2(av, "add_row");
  if (rv.size() != av.cols()) throw DimensionError("add_row: row length differs from column count");
  Tensor y(av.shape());
  const std::size_t n = av.rows(), d = av.cols();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) y[r * d + c] = av[r * d + c] + rv[c];
  const std::size_t pa = tape.node_of(a), pr = tape.node_of(row);
  return tape.record(std::move(y), {a, row}, [pa, pr, n, d](GradientTape& t, std::size_t self) {
    const Tensor& gy = t.node_grad(self);
    if (Tensor* ga = t.grad_slot(pa)) for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    if (Tensor* gr = t.grad_slot(pr))
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) (*gr)[c] += gy[r * d + c];
  });
}

Var scale_rows(Var a, Var s) {
  GradientTape& tape = shared_tape(a, s);
  const Tensor& av = tape.value(a);
  const Tensor& sv = tape.value(s);
  require_rank2(av, "scale_rows");
  if (sv.size() != av.rows()) throw DimensionError("scale_rows: one scale per row required");
  const std::size_t n = av.rows(), d = av.cols();
  Tensor y(av.shape());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) y[r * d + c] = av[r * d + c] * sv[r];
  const std::size_t pa = tape.node_of(a), ps = tape.node_of(s);
  return tape.record(std::move(y), {a, s}, [pa, ps, n, d](GradientTape& t, std::size_t self) {
    const Tensor& gy = t.node_grad(self);
    if (Tensor* ga = t.grad_slot(pa)) {
      const Tensor& sv = t.node_value(ps);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) (*ga)[r * d + c] += gy[r * d + c] * sv[r];
    }
    if (Tensor* gs = t.grad_slot(ps)) {
      const Tensor& av = t.node_value(pa);
      for (std::size_t r = 0; r < n; ++r) {
        float acc = 0.0f;
        for (std::size_t c = 0; c < d; ++c) acc += gy[r * d + c] * av[r * d + c];
        (*gs)[r] += acc;
      }
    }
  });
}

Var square(Var a) {
  return unary(a, [](float x) { return x * x; }, [](float x, float) { return 2.0f * x; });
}

Var silu(Var a) {
  return unary(
      a, [](float x) { return x / (1.0f + std::exp(-x)); },
      [](float x, float) {
        const float s = 1.0f / (1.0f + std::exp(-x));
        return s * (1.0f + x * (1.0f - s));
      });
}

Var tanh(Var a) {
  return unary(a, [](float x) { return std::tanh(x); }, [](float, float y) { return 1.0f - y * y; });
}

Var sigmoid(Var a) {
  return unary(a, [](float x) { return 1.0f / (1.0f + std::exp(-x)); }, [](float, float y) { return y * (1.0f - y); });
}

Var smooth_abs(Var a, float eps) {
  const float eps2 = eps * eps;
  return unary(a, [eps2](float x) { return std::sqrt(x * x + eps2); }, [](float x, float y) { return x / y; });
}

Var sqrt(Var a) {
  return unary(a, [](float x) { return std::sqrt(x); }, [](float, float y) { return 0.5f / y; });
}

Var sum(Var a) {
  GradientTape& tape = *a.tape;
  const Tensor& av = tape.value(a);
  double acc = 0.0;
  for (float v : av.values()) acc += v;
  const std::size_t pa = tape.node_of(a);
  return tape.record(Tensor({1, 1}, float(acc)), {a}, [pa](GradientTape& t, std::size_t self) {
    Tensor* ga = t.grad_slot(pa);
    if (!ga) return;
    const float g = t.node_grad(self)[0];
    for (auto& v : ga->values()) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.tape->value(a).size();
  return scale(sum(a), n ? 1.0f / float(n) : 0.0f);
}

Var row_sum(Var a) {
  GradientTape& tape = *a.tape;
  const Tensor& av = tape.value(a);
  require_rank2(av, "row_sum");
  const std::size_t n = av.rows(), d = av.cols();
  Tensor y({n, 1});
  for (std::size_t r = 0; r < n; ++r) {
    float acc = 0.0f;
    for (std::size_t c = 0; c < d; ++c) acc += av[r * d + c];
    y[r] = acc;
  }
  const std::size_t pa = tape.node_of(a);
  return tape.record(std::move(y), {a}, [pa, n, d](GradientTape& t, std::size_t self) {
    Tensor* ga = t.grad_slot(pa);
    if (!ga) return;
    const Tensor& gy = t.node_grad(self);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) (*ga)[r * d + c] += gy[r];
  });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  GradientTape& tape = *parts.front().tape;
  const std::size_t n = tape.value(parts.front()).rows();
  std::vector<std::size_t> widths, nodes;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = tape.value(p);
    require_rank2(v, "concat_cols");
    if (v.rows() != n) throw DimensionError("concat_cols: row count mismatch");
    widths.push_back(v.cols());
    nodes.push_back(tape.node_of(p));
    total += v.cols();
  }
  Tensor y({n, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = tape.value(parts[k]);
    for (std::size_t r = 0; r < n; ++r)
      std::copy_n(v.data() + r * widths[k], widths[k], y.data() + r * total + offset);
    offset += widths[k];
  }
  auto fn = [nodes, widths, n, total](GradientTape& t, std::size_t self) {
    const Tensor& gy = t.node_grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (Tensor* g = t.grad_slot(nodes[k])) {
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) (*g)[r * widths[k] + c] += gy[r * total + off + c];
      }
      off += widths[k];
    }
  };
  return tape.record(std::move(y), parts, fn);
}

Var gather_rows(Var table, std::span<const std::size_t> index) {
  GradientTape& tape = *table.tape;
  const Tensor& tv = tape.value(table);
  require_rank2(tv, "gather_rows");
  Tensor y = advdm::gather_rows(tv, index);
  const std::size_t pt = tape.node_of(table), d = tv.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  return tape.record(std::move(y), {table}, [pt, d, idx = std::move(idx)](GradientTape& t, std::size_t self) {
    Tensor* gt = t.grad_slot(pt);
    if (!gt) return;
    const Tensor& gy = t.node_grad(self);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < d; ++c) (*gt)[idx[i] * d + c] += gy[i * d + c];
  });
}

Var gather_cols(Var a, std::span<const std::size_t> index) {
  GradientTape& tape = *a.tape;
  const Tensor& av = tape.value(a);
  require_rank2(av, "gather_cols");
  const std::size_t n = av.rows(), d = av.cols(), k = index.size();
  Tensor y({n, k});
  for (std::size_t j = 0; j < k; ++j)
    if (index[j] >= d) throw DimensionError("gather_cols: index out of range");
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < k; ++j) y[r * k + j] = av[r * d + index[j]];
  const std::size_t pa = tape.node_of(a);
  std::vector<std::size_t> idx(index.begin(), index.end());
  return tape.record(std::move(y), {a}, [pa, n, d, k, idx = std::move(idx)](GradientTape& t, std::size_t self) {
    Tensor* ga = t.grad_slot(pa);
    if (!ga) return;
    const Tensor& gy = t.node_grad(self);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < k; ++j) (*ga)[r * d + idx[j]] += gy[r * k + j];
  });
}

Var broadcast_rows(Var row, std::size_t count) {
  GradientTape& tape = *row.tape;
  const Tensor& rv = tape.value(row);
  if (rv.rows() != 1) throw DimensionError("broadcast_rows: expected a single row");
  Tensor y = repeat_row(rv.reshaped({1, rv.size()}), count);
  const std::size_t pr = tape.node_of(row), d = rv.size();
  return tape.record(std::move(y), {row}, [pr, d, count](GradientTape& t, std::size_t self) {
    Tensor* gr = t.grad_slot(pr);
    if (!gr) return;
    const Tensor& gy = t.node_grad(self);
    for (std::size_t r = 0; r < count; ++r)
      for (std::size_t c = 0; c < d; ++c) (*gr)[c] += gy[r * d + c];
  });
}

Var cross_entropy(Var logits, std::span<const int> labels) {
  GradientTape& tape = *logits.tape;
  const Tensor& lv = tape.value(logits);
  require_rank2(lv, "cross_entropy");
  const std::size_t n = lv.rows(), k = lv.cols();
  if (labels.size() != n) throw DimensionError("cross_entropy: one label per row required");
  Tensor probs({n, k});
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] < 0 || std::size_t(labels[r]) >= k) throw DimensionError("cross_entropy: label out of range");
    const float* row = lv.data() + r * k;
    const float m = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(double(row[c] - m));
    for (std::size_t c = 0; c < k; ++c) probs[r * k + c] = float(std::exp(double(row[c] - m)) / z);
    total += (std::log(z) + m) - row[labels[r]];
  }
  const std::size_t pl = tape.node_of(logits);
  std::vector<int> lab(labels.begin(), labels.end());
  return tape.record(Tensor({1, 1}, float(total / double(n ? n : 1))), {logits},
                     [pl, n, k, probs = std::move(probs), lab = std::move(lab)](GradientTape& t, std::size_t self) {
                       Tensor* gl = t.grad_slot(pl);
                       if (!gl) return;
                       const float g = t.node_grad(self)[0] / float(n);
                       for (std::size_t r = 0; r < n; ++r)
                         for (std::size_t c = 0; c < k; ++c)
                           (*gl)[r * k + c] += g * (probs[r * k + c] - (int(c) == lab[r] ? 1.0f : 0.0f));
                     });
}

}  // namespace ops

}  // namespace advdm
