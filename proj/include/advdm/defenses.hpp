// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "advdm/autodiff.hpp"
#include "advdm/codec.hpp"
#include "advdm/diffusion.hpp"

namespace advdm {

enum class DefenseKind { none, jpeg_like, tvm, resample, diffpure };

DefenseKind parse_defense_kind(std::string_view name);
std::string_view to_string(DefenseKind kind);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::none;
  int quality = 75;              ///< jpeg_like, 1..100
  float tv_lambda = 0.02f;       ///< tvm
  std::size_t tv_iters = 50;     ///< tvm
  double resample_factor = 2.0;  ///< resample, >= 1
  std::size_t t_star = 25;       ///< diffpure, in [1, T]

  void validate() const;
};

/// Model handles the purification defense needs. In latent mode `codec` is non-null and
/// purification runs on encoded images.
struct PurifierContext {
  const NoisePredictor* model = nullptr;
  const DiffusionSchedule* schedule = nullptr;
  const LatentCodec* codec = nullptr;
};

using Block8 = std::array<float, 64>;

/// Orthonormal 8x8 DCT-II and its inverse.
Block8 dct8x8(const Block8& block);
Block8 idct8x8(const Block8& coefficients);
/// Standard luminance quantisation table scaled for `quality` (libjpeg convention).
std::array<int, 64> luminance_quant_table(int quality);

/// Blockwise DCT quantisation of [n, side*side] images in [0, 1]. Sides that are not a multiple
/// of 8 are edge-padded and cropped back.
Tensor jpeg_like(const Tensor& images, std::size_t side, int quality);

/// Smoothing constant of the absolute value inside the TV objective.
inline constexpr float kTvSmoothing = 1e-3f;

/// ||y - x||^2 + lambda * sum_i smooth_abs(horizontal and vertical differences of y), summed over rows.
Var tv_objective(GradientTape& tape, Var y, const Tensor& x, std::size_t side, float lambda,
                 float smoothing = kTvSmoothing);

/// Gradient descent (with backtracking) on the TV objective starting from y = x. `objective_trace`,
/// when given, receives the objective before the first and after every iteration.
Tensor tvm(const Tensor& images, std::size_t side, float lambda, std::size_t iters,
           std::vector<double>* objective_trace = nullptr);

/// Bilinear downscale by `factor` followed by bilinear upscale back to `side`.
Tensor resample(const Tensor& images, std::size_t side, double factor);

/// Applies a configured defense; diffpure needs `purifier` and consumes `rng`.
Tensor apply_defense(const DefenseConfig& config, const Tensor& images, std::size_t side,
                     const PurifierContext& purifier, RngStream& rng);

}  // namespace advdm
