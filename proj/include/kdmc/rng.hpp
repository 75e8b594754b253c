// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace kdmc {

/// Counter-free splittable random stream: xoshiro256++ seeded through
/// splitmix64 from a (master seed, stream index) pair. Two streams with
/// different indices are statistically independent, and a stream's output
/// is a pure function of (seed, index), so any partition of particles
/// across workers reproduces the serial draw sequences bit-exactly.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
    // Mix the index in with a splitmix64 chain so that nearby indices do
    // not produce correlated xoshiro states.
    std::uint64_t z = master_seed ^ (stream_index * 0x9e3779b97f4a7c15ULL);
    for (auto& word : state_) {
      word = splitmix64(z);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform draw in (0, 1]; safe as a log() argument.
  double uniform01_open_low() { return 1.0 - uniform01(); }

  /// Standard normal via Box-Muller; the spare value is cached so each
  /// call consumes a deterministic amount of stream state.
  double standard_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01_open_low();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Inverse-CDF map for Exp(rate): u in (0, 1] -> flight time.
inline double exponential_from_uniform(double u, double rate) {
  return -std::log(u) / rate;
}

/// Exponential flight time with mean 1/rate.
inline double sample_exponential(RngStream& s, double rate) {
  if (!(rate > 0.0)) {
    throw std::invalid_argument("sample_exponential: rate must be positive");
  }
  return exponential_from_uniform(s.uniform01_open_low(), rate);
}

}  // namespace kdmc
