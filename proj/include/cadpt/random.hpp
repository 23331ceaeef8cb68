// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "cadpt/tensor.hpp"

namespace cadpt {

using Rng = std::mt19937_64;

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent stream for one purpose ("init", "data", "shuffle", ...) of a run seed.
inline Rng derive_rng(std::uint64_t seed, std::string_view purpose) {
  std::uint64_t state = seed ^ fnv1a64(purpose);
  return Rng(splitmix64(state));
}

/// Weight matrix drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <class T>
BasicTensor<T> uniform_fan_in(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> v(rows * cols);
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return BasicTensor<T>({rows, cols}, std::move(v), true);
}

template <class T>
BasicTensor<T> normal_scaled(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<T> v(rows * cols);
  for (auto& x : v) x = static_cast<T>(stddev * dist(rng));
  return BasicTensor<T>({rows, cols}, std::move(v), true);
}

template <class T>
BasicTensor<T> random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<T> v(rows * cols);
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return BasicTensor<T>({rows, cols}, std::move(v));
}

}  // namespace cadpt
