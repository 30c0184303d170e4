// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "advdm/tensor.hpp"

namespace advdm {

/// Counter-based random stream: every draw is a pure function of (seed, counter).
///
/// Two streams constructed with the same seed and counter produce the same
/// sequence on every platform. Gaussian draws use Box-Muller on pairs of
/// uniforms, so no hidden cache survives between calls.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t counter = 0) noexcept
      : seed_(seed), key_(mix(seed ^ 0x6a09e667f3bcc909ULL)), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in the open interval (0, 1).
  double uniform() noexcept;
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  /// Standard normal draw; consumes two uniforms.
  double normal() noexcept;

  /// Independent child stream identified by `tag`. Does not advance this stream.
  RngStream fork(std::uint64_t tag) const noexcept;

  static std::uint64_t mix(std::uint64_t z) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// I.i.d. standard normal tensor; advances the stream by 2 * ceil(n / 2) uniforms.
Tensor gaussian(RngStream& rng, Shape shape);
/// I.i.d. uniform tensor on [lo, hi).
Tensor uniform(RngStream& rng, Shape shape, float lo, float hi);

}  // namespace advdm
