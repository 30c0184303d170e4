// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/rng.hpp"

#include <cmath>
#include <numbers>

namespace advdm {

std::uint64_t RngStream::mix(std::uint64_t z) noexcept {
  // splitmix64 finalizer
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t RngStream::next_u64() noexcept {
  ++counter_;
  return mix(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
}

double RngStream::uniform() noexcept {
  // 53 random bits, shifted by half an ulp so 0 is never produced.
  return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  const auto span = std::uint64_t(hi - lo) + 1;
  return lo + std::int64_t(next_u64() % span);
}

double RngStream::normal() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::fork(std::uint64_t tag) const noexcept {
  return RngStream(mix(seed_ ^ mix(tag + 0x243f6a8885a308d3ULL)));
}

Tensor gaussian(RngStream& rng, Shape shape) {
  Tensor out(std::move(shape));
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phase = 2.0 * std::numbers::pi * u2;
    out[i] = float(r * std::cos(phase));
    if (i + 1 < n) out[i + 1] = float(r * std::sin(phase));
  }
  return out;
}

Tensor uniform(RngStream& rng, Shape shape, float lo, float hi) {
  Tensor out(std::move(shape));
  for (auto& v : out.values()) v = float(lo + (double(hi) - lo) * rng.uniform());
  return out;
}

}  // namespace advdm
