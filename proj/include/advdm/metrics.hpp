// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "advdm/codec.hpp"

namespace advdm {

enum class FeatureSource { real, generated };
enum class FeatureMode { encoder, pixel };

struct FeatureBatch {
  Tensor features;  ///< [n, d]
  FeatureSource source = FeatureSource::real;
  std::size_t count() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
};

/// Encoder features of a batch of images, or the raw pixels in `FeatureMode::pixel`.
FeatureBatch embed(const LatentCodec& codec, const Tensor& images, FeatureSource source,
                   FeatureMode mode = FeatureMode::encoder);

/// Frechet distance between Gaussian fits of two feature batches:
/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}). Requires n >= d + 1 in both.
double frechet(const FeatureBatch& a, const FeatureBatch& b);
double frechet(const Tensor& a, const Tensor& b);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

inline constexpr std::size_t kDefaultNeighbors = 3;

/// Improved k-NN manifold precision and recall. Requires k < min(n_real, n_gen).
PrecisionRecall precision_recall(const FeatureBatch& real, const FeatureBatch& generated,
                                 std::size_t k = kDefaultNeighbors);

struct MetricReport {
  double fid = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t n_real = 0;
  std::size_t n_gen = 0;
  std::size_t k = kDefaultNeighbors;
};

MetricReport evaluate_features(const FeatureBatch& real, const FeatureBatch& generated,
                               std::size_t k = kDefaultNeighbors);

}  // namespace advdm
