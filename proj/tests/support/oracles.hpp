// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "advdm/codec.hpp"
#include "advdm/diffusion.hpp"
#include "advdm/metrics.hpp"
#include "advdm/tensor.hpp"

namespace advdm::testing {

/// Central differences, one coordinate at a time, accumulated in double.
inline Tensor central_difference(const std::function<double(const Tensor&)>& f, const Tensor& x, float h = 1e-3f) {
  Tensor g(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float keep = probe[i];
    probe[i] = keep + h;
    const double up = f(probe);
    probe[i] = keep - h;
    const double down = f(probe);
    probe[i] = keep;
    g[i] = float((up - down) / (2.0 * double(h)));
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), with 0 when both vanish.
inline double relative_error(const Tensor& a, const Tensor& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

/// out = a[n,k] * b[k,m] by explicit triple loop.
inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += double(a.at(i, p)) * b.at(p, j);
      out[i * m + j] = float(s);
    }
  return out;
}

/// SiLU MLP with a linear last layer, evaluated in double from "<prefix>.w<l>" / "<prefix>.b<l>".
inline std::vector<double> mlp_double(const ParameterSet& p, const std::string& prefix, std::size_t layers,
                                      std::vector<double> h) {
  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor& w = p.get(prefix + ".w" + std::to_string(l));
    const Tensor& b = p.get(prefix + ".b" + std::to_string(l));
    std::vector<double> next(w.cols());
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = b[j];
      for (std::size_t i = 0; i < w.rows(); ++i) s += h[i] * w.at(i, j);
      next[j] = l + 1 < layers ? s / (1.0 + std::exp(-s)) : s;
    }
    h = std::move(next);
  }
  return h;
}

/// Standardised codec latent of one input row, in double.
inline std::vector<double> encode_double(const LatentCodec& codec, const Tensor& row) {
  const ParameterSet& p = codec.parameters();
  std::vector<double> z = mlp_double(p, "enc", 3, std::vector<double>(row.data(), row.data() + row.size()));
  const Tensor& shift = p.get("latent_shift");
  const Tensor& scale = p.get("latent_scale");
  for (std::size_t d = 0; d < z.size(); ++d) z[d] = (z[d] - shift[d]) * scale[d];
  return z;
}

/// Denoiser loss recomputed in double from the raw parameters: sinusoidal time
/// features, [x_t | temb | cond] input, SiLU hidden layers, linear output.
inline double l_dm_double(const Denoiser& model, const Tensor& x0, const Tensor& cond, std::size_t t, const Tensor& eps,
                          const DiffusionSchedule& sched) {
  const DenoiserConfig& c = model.config();
  const ParameterSet& p = model.parameters();
  const double ab = sched.alpha_bar(t);
  const std::size_t half = c.time_dim / 2;
  double total = 0;
  for (std::size_t r = 0; r < x0.rows(); ++r) {
    std::vector<double> h;
    for (std::size_t d = 0; d < c.data_dim; ++d)
      h.push_back(std::sqrt(ab) * x0.at(r, d) + std::sqrt(1.0 - ab) * eps.at(r, d));
    std::vector<double> temb(c.time_dim);
    for (std::size_t i = 0; i < half; ++i) {
      const double arg = double(t) * std::exp(-std::log(10000.0) * double(i) / double(half));
      // match the float rounding of the stored time features
      temb[i] = double(float(std::sin(arg)));
      temb[half + i] = double(float(std::cos(arg)));
    }
    h.insert(h.end(), temb.begin(), temb.end());
    const std::size_t crow = cond.rows() == 1 ? 0 : r;
    for (std::size_t d = 0; d < c.cond_dim; ++d) h.push_back(cond.at(crow, d));
    h = mlp_double(p, "eps", c.depth + 1, std::move(h));
    for (std::size_t d = 0; d < c.data_dim; ++d) total += (eps.at(r, d) - h[d]) * (eps.at(r, d) - h[d]);
  }
  return total / double(x0.rows());
}

/// ||y - x||^2 + lambda * sum sqrt(d^2 + s^2) over right and down neighbour differences, in double.
inline double tv_objective_double(const Tensor& y, const Tensor& x, std::size_t side, double lambda, double s) {
  double fid = 0, tv = 0;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const auto at = [&](std::size_t py, std::size_t px) { return double(y.at(r, py * side + px)); };
    for (std::size_t i = 0; i < side * side; ++i) fid += (double(y.at(r, i)) - x.at(r, i)) * (double(y.at(r, i)) - x.at(r, i));
    for (std::size_t py = 0; py < side; ++py)
      for (std::size_t px = 0; px < side; ++px) {
        if (px + 1 < side) tv += std::sqrt(std::pow(at(py, px + 1) - at(py, px), 2) + s * s);
        if (py + 1 < side) tv += std::sqrt(std::pow(at(py + 1, px) - at(py, px), 2) + s * s);
      }
  }
  return fid + lambda * tv;
}

/// Closed-form gradient of tv_objective_double with respect to y.
inline Tensor tv_gradient_double(const Tensor& y, const Tensor& x, std::size_t side, double lambda, double s) {
  Tensor g(y.shape());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    std::vector<double> acc(side * side);
    for (std::size_t i = 0; i < side * side; ++i) acc[i] = 2.0 * (double(y.at(r, i)) - x.at(r, i));
    const auto pair = [&](std::size_t a, std::size_t b) {
      const double d = double(y.at(r, b)) - y.at(r, a);
      const double w = lambda * d / std::sqrt(d * d + s * s);
      acc[b] += w;
      acc[a] -= w;
    };
    for (std::size_t py = 0; py < side; ++py)
      for (std::size_t px = 0; px < side; ++px) {
        if (px + 1 < side) pair(py * side + px, py * side + px + 1);
        if (py + 1 < side) pair(py * side + px, (py + 1) * side + px);
      }
    for (std::size_t i = 0; i < side * side; ++i) g[r * side * side + i] = float(acc[i]);
  }
  return g;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// O(n^2) k-NN manifold precision/recall in double.
inline PrecisionRecall brute_force_pr(const Tensor& real, const Tensor& gen, std::size_t k) {
  const auto dist = [](const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
    double s = 0;
    for (std::size_t d = 0; d < a.cols(); ++d) s += (double(a.at(i, d)) - b.at(j, d)) * (double(a.at(i, d)) - b.at(j, d));
    return std::sqrt(s);
  };
  const auto radii = [&](const Tensor& x) {
    std::vector<double> r(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      std::vector<double> d;
      for (std::size_t j = 0; j < x.rows(); ++j)
        if (j != i) d.push_back(dist(x, i, x, j));
      std::sort(d.begin(), d.end());
      r[i] = d[k - 1];
    }
    return r;
  };
  const auto coverage = [&](const Tensor& ref, const std::vector<double>& rad, const Tensor& probe) {
    std::size_t in = 0;
    for (std::size_t i = 0; i < probe.rows(); ++i) {
      for (std::size_t j = 0; j < ref.rows(); ++j) {
        if (dist(probe, i, ref, j) <= rad[j]) {
          ++in;
          break;
        }
      }
    }
    return double(in) / double(probe.rows());
  };
  return {coverage(real, radii(real), gen), coverage(gen, radii(gen), real)};
}

}  // namespace advdm::testing
