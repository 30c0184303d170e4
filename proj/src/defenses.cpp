// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "advdm/errors.hpp"

namespace advdm {

DefenseKind parse_defense_kind(std::string_view name) {
  if (name == "none") return DefenseKind::none;
  if (name == "jpeg_like") return DefenseKind::jpeg_like;
  if (name == "tvm") return DefenseKind::tvm;
  if (name == "resample") return DefenseKind::resample;
  if (name == "diffpure") return DefenseKind::diffpure;
  throw ConfigError("unknown defense kind '" + std::string(name) + "'");
}

std::string_view to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::none: return "none";
    case DefenseKind::jpeg_like: return "jpeg_like";
    case DefenseKind::tvm: return "tvm";
    case DefenseKind::resample: return "resample";
    case DefenseKind::diffpure: return "diffpure";
  }
  return "?";
}

void DefenseConfig::validate() const {
  if (quality < 1 || quality > 100) throw ConfigError("jpeg quality must lie in [1, 100]");
  if (!(tv_lambda >= 0.0f)) throw ConfigError("tv lambda must be non-negative");
  if (!(resample_factor >= 1.0)) throw ConfigError("resample factor must be at least 1");
  if (t_star < 1) throw ConfigError("diffpure t_star must be at least 1");
}

namespace {

void require_pixels(const Tensor& images, std::size_t side, const char* who) {
  if (side == 0 || images.rank() != 2 || images.cols() != side * side) {
    throw ModeError(std::string(who) + " requires [n, side*side] pixel data");
  }
  for (float v : images.values()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ModeError(std::string(who) + " requires values in [0, 1]");
  }
}

const std::array<std::array<double, 8>, 8>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, 8>, 8> b{};
    for (std::size_t k = 0; k < 8; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (std::size_t n = 0; n < 8; ++n) b[k][n] = scale * std::cos(std::numbers::pi * (2.0 * n + 1.0) * k / 16.0);
    }
    return b;
  }();
  return basis;
}

constexpr std::array<int, 64> kLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24, 40,  57,
    69, 56, 14, 17, 22,  29,  51,  87,  80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35, 55, 64,
    81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

}  // namespace

Block8 dct8x8(const Block8& block) {
  const auto& b = dct_basis();
  Block8 out{};
  for (std::size_t u = 0; u < 8; ++u)
    for (std::size_t v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) acc += b[u][y] * b[v][x] * block[y * 8 + x];
      out[u * 8 + v] = float(acc);
    }
  return out;
}

Block8 idct8x8(const Block8& coefficients) {
  const auto& b = dct_basis();
  Block8 out{};
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (std::size_t u = 0; u < 8; ++u)
        for (std::size_t v = 0; v < 8; ++v) acc += b[u][y] * b[v][x] * coefficients[u * 8 + v];
      out[y * 8 + x] = float(acc);
    }
  return out;
}

std::array<int, 64> luminance_quant_table(int quality) {
  quality = std::clamp(quality, 1, 100);
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> table{};
  for (std::size_t i = 0; i < 64; ++i) table[i] = std::clamp((kLuminanceTable[i] * scale + 50) / 100, 1, 255);
  return table;
}

Tensor jpeg_like(const Tensor& images, std::size_t side, int quality) {
  require_pixels(images, side, "jpeg_like");
  if (quality < 1 || quality > 100) throw ConfigError("jpeg quality must lie in [1, 100]");
  const auto table = luminance_quant_table(quality);
  const std::size_t padded = (side + 7) / 8 * 8;
  Tensor out(images.shape());
  std::vector<double> plane(padded * padded);
  for (std::size_t r = 0; r < images.rows(); ++r) {
    const float* src = images.data() + r * side * side;
    for (std::size_t y = 0; y < padded; ++y)
      for (std::size_t x = 0; x < padded; ++x)
        plane[y * padded + x] = 255.0 * src[std::min(y, side - 1) * side + std::min(x, side - 1)] - 128.0;
    for (std::size_t by = 0; by < padded; by += 8) {
      for (std::size_t bx = 0; bx < padded; bx += 8) {
        Block8 block{};
        for (std::size_t y = 0; y < 8; ++y)
          for (std::size_t x = 0; x < 8; ++x) block[y * 8 + x] = float(plane[(by + y) * padded + bx + x]);
        Block8 coef = dct8x8(block);
        for (std::size_t i = 0; i < 64; ++i) coef[i] = float(std::nearbyint(coef[i] / table[i]) * table[i]);
        const Block8 rec = idct8x8(coef);
        for (std::size_t y = 0; y < 8; ++y)
          for (std::size_t x = 0; x < 8; ++x) plane[(by + y) * padded + bx + x] = rec[y * 8 + x];
      }
    }
    float* dst = out.data() + r * side * side;
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x)
        dst[y * side + x] = float(std::clamp((plane[y * padded + x] + 128.0) / 255.0, 0.0, 1.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Total variation minimisation

namespace {

struct NeighbourPairs {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

NeighbourPairs neighbour_pairs(std::size_t side) {
  NeighbourPairs p;
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x + 1 < side; ++x) {
      p.first.push_back(y * side + x);
      p.second.push_back(y * side + x + 1);
    }
  for (std::size_t y = 0; y + 1 < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      p.first.push_back(y * side + x);
      p.second.push_back((y + 1) * side + x);
    }
  return p;
}

}  // namespace

Var tv_objective(GradientTape& tape, Var y, const Tensor& x, std::size_t side, float lambda, float smoothing) {
  const Tensor& yv = tape.value(y);
  if (yv.rank() != 2 || yv.cols() != side * side) throw DimensionError("tv_objective: expected [n, side*side]");
  require_same_shape(yv, x, "tv_objective");
  const NeighbourPairs pairs = neighbour_pairs(side);
  const Var fidelity = ops::sum(ops::square(ops::sub(y, tape.constant(x))));
  const Var diffs = ops::sub(ops::gather_cols(y, pairs.second), ops::gather_cols(y, pairs.first));
  const Var tv = ops::sum(ops::smooth_abs(diffs, smoothing));
  return ops::add(fidelity, ops::scale(tv, lambda));
}

Tensor tvm(const Tensor& images, std::size_t side, float lambda, std::size_t iters, std::vector<double>* objective_trace) {
  require_pixels(images, side, "tvm");
  Tensor out(images.shape());
  if (objective_trace) objective_trace->assign(iters + 1, 0.0);
  for (std::size_t r = 0; r < images.rows(); ++r) {
    const Tensor x = slice_rows(images, r, 1);
    Tensor y = x;
    auto evaluate = [&](const Tensor& candidate) {
      GradientTape tape;
      return double(tape.value(tv_objective(tape, tape.constant(candidate), x, side, lambda))[0]);
    };
    double f = evaluate(y);
    if (objective_trace) (*objective_trace)[0] += f;
    double step = 0.25;
    for (std::size_t it = 0; it < iters; ++it) {
      Tensor g;
      {
        GradientTape tape;
        const Var yv = tape.leaf(y);
        g = tape.grad_wrt(tv_objective(tape, yv, x, side, lambda), yv);
      }
      const double g2 = squared_norm(g);
      if (g2 > 0.0) {
        step = std::min(step * 2.0, 0.5);
        // Armijo backtracking keeps the objective non-increasing.
        for (int attempt = 0; attempt < 40; ++attempt) {
          Tensor candidate = y;
          for (std::size_t i = 0; i < candidate.size(); ++i) candidate[i] -= float(step) * g[i];
          const double fc = evaluate(candidate);
          if (fc <= f - 0.5 * step * g2) {
            y = std::move(candidate);
            f = fc;
            break;
          }
          step *= 0.5;
        }
      }
      if (objective_trace) (*objective_trace)[it + 1] += f;
    }
    for (std::size_t i = 0; i < y.size(); ++i) out[r * side * side + i] = std::clamp(y[i], 0.0f, 1.0f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

std::vector<float> bilinear(const float* src, std::size_t in, std::size_t out) {
  std::vector<float> dst(out * out);
  const double ratio = double(in) / double(out);
  auto coord = [&](std::size_t o, std::size_t& i0, std::size_t& i1, double& w) {
    double s = (double(o) + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, double(in - 1));
    i0 = std::size_t(std::floor(s));
    i1 = std::min(i0 + 1, in - 1);
    w = s - double(i0);
  };
  for (std::size_t oy = 0; oy < out; ++oy) {
    std::size_t y0, y1;
    double wy;
    coord(oy, y0, y1, wy);
    for (std::size_t ox = 0; ox < out; ++ox) {
      std::size_t x0, x1;
      double wx;
      coord(ox, x0, x1, wx);
      const double top = (1.0 - wx) * src[y0 * in + x0] + wx * src[y0 * in + x1];
      const double bottom = (1.0 - wx) * src[y1 * in + x0] + wx * src[y1 * in + x1];
      dst[oy * out + ox] = float((1.0 - wy) * top + wy * bottom);
    }
  }
  return dst;
}

}  // namespace

Tensor resample(const Tensor& images, std::size_t side, double factor) {
  if (!(factor >= 1.0)) throw ConfigError("resample factor must be at least 1");
  require_pixels(images, side, "resample");
  const auto small = std::max<std::size_t>(1, std::size_t(std::llround(double(side) / factor)));
  Tensor out(images.shape());
  for (std::size_t r = 0; r < images.rows(); ++r) {
    const std::vector<float> down = bilinear(images.data() + r * side * side, side, small);
    const std::vector<float> up = bilinear(down.data(), small, side);
    for (std::size_t i = 0; i < up.size(); ++i) out[r * side * side + i] = std::clamp(up[i], 0.0f, 1.0f);
  }
  return out;
}

Tensor apply_defense(const DefenseConfig& config, const Tensor& images, std::size_t side,
                     const PurifierContext& purifier, RngStream& rng) {
  config.validate();
  switch (config.kind) {
    case DefenseKind::none: return images;
    case DefenseKind::jpeg_like: return jpeg_like(images, side, config.quality);
    case DefenseKind::tvm: return tvm(images, side, config.tv_lambda, config.tv_iters);
    case DefenseKind::resample: return resample(images, side, config.resample_factor);
    case DefenseKind::diffpure: {
      if (!purifier.model || !purifier.schedule) throw ConfigError("diffpure defense requires a diffusion model");
      if (purifier.codec) {
        const Tensor z = purifier.codec->encode(images);
        Tensor out = purifier.codec->decode(diffpure(*purifier.model, *purifier.schedule, z, config.t_star, rng));
        for (auto& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
        return out;
      }
      Tensor out = diffpure(*purifier.model, *purifier.schedule, images, config.t_star, rng);
      for (auto& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
      return out;
    }
  }
  return images;
}

}  // namespace advdm
