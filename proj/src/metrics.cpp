// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "advdm/errors.hpp"

namespace advdm {

FeatureBatch embed(const LatentCodec& codec, const Tensor& images, FeatureSource source, FeatureMode mode) {
  if (mode == FeatureMode::pixel) return FeatureBatch{images, source};
  return FeatureBatch{codec.encode(images), source};
}

namespace {

struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

GaussianFit fit(const Tensor& x) {
  require_rank2(x, "frechet");
  const auto n = Eigen::Index(x.rows()), d = Eigen::Index(x.cols());
  if (x.rows() < x.cols() + 1) {
    throw SampleSizeError("Frechet distance needs at least d + 1 = " + std::to_string(x.cols() + 1) +
                          " samples, got " + std::to_string(x.rows()));
  }
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = x.at(std::size_t(r), std::size_t(c));
  GaussianFit g;
  g.mean = m.colwise().mean().transpose();
  const Eigen::MatrixXd centered = m.rowwise() - g.mean.transpose();
  g.cov = (centered.transpose() * centered) / double(n - 1);
  return g;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s + s.transpose()));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Tr((S_a S_b)^{1/2}) through the symmetric product S_a^{1/2} S_b S_a^{1/2}.
double trace_sqrt_product(const Eigen::MatrixXd& sa, const Eigen::MatrixXd& sb) {
  const Eigen::MatrixXd ra = psd_sqrt(sa);
  const Eigen::MatrixXd m = ra * sb * ra;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

}  // namespace

double frechet(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw DimensionError("frechet: feature dimensions differ");
  const GaussianFit fa = fit(a);
  const GaussianFit fb = fit(b);
  const double mean_term = (fa.mean - fb.mean).squaredNorm();
  // Averaging both product orders makes the result exactly symmetric in its arguments.
  const double cross = 0.5 * (trace_sqrt_product(fa.cov, fb.cov) + trace_sqrt_product(fb.cov, fa.cov));
  const double value = mean_term + (fa.cov.trace() + fb.cov.trace()) - 2.0 * cross;
  return std::max(0.0, value);
}

double frechet(const FeatureBatch& a, const FeatureBatch& b) { return frechet(a.features, b.features); }

namespace {

double squared_distance(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  const std::size_t d = a.cols();
  double s = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double diff = double(a[i * d + c]) - double(b[j * d + c]);
    s += diff * diff;
  }
  return s;
}

/// Squared distance from each point to its k-th nearest neighbour within the same set.
std::vector<double> knn_radii(const Tensor& x, std::size_t k) {
  const std::size_t n = x.rows();
  std::vector<double> radii(n);
  std::vector<double> dist;
  dist.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dist.push_back(squared_distance(x, i, x, j));
    std::nth_element(dist.begin(), dist.begin() + std::ptrdiff_t(k - 1), dist.end());
    radii[i] = dist[k - 1];
  }
  return radii;
}

double manifold_coverage(const Tensor& reference, const std::vector<double>& radii, const Tensor& query) {
  if (query.rows() == 0) return 0.0;
  std::size_t inside = 0;
  for (std::size_t q = 0; q < query.rows(); ++q) {
    for (std::size_t r = 0; r < reference.rows(); ++r) {
      if (squared_distance(query, q, reference, r) <= radii[r]) {
        ++inside;
        break;
      }
    }
  }
  return double(inside) / double(query.rows());
}

}  // namespace

PrecisionRecall precision_recall(const FeatureBatch& real, const FeatureBatch& generated, std::size_t k) {
  if (real.dim() != generated.dim()) throw DimensionError("precision_recall: feature dimensions differ");
  if (k < 1 || k >= std::min(real.count(), generated.count())) {
    throw NeighborCountError("k = " + std::to_string(k) + " must satisfy 1 <= k < min(n_real, n_gen)");
  }
  PrecisionRecall pr;
  pr.precision = manifold_coverage(real.features, knn_radii(real.features, k), generated.features);
  pr.recall = manifold_coverage(generated.features, knn_radii(generated.features, k), real.features);
  return pr;
}

MetricReport evaluate_features(const FeatureBatch& real, const FeatureBatch& generated, std::size_t k) {
  MetricReport rep;
  rep.fid = frechet(real, generated);
  const PrecisionRecall pr = precision_recall(real, generated, k);
  rep.precision = pr.precision;
  rep.recall = pr.recall;
  rep.n_real = real.count();
  rep.n_gen = generated.count();
  rep.k = k;
  return rep;
}

}  // namespace advdm
