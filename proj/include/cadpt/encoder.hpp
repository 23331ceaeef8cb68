// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic stand-in for a frozen chart encoder. One patch per category:
//
//   [0]      first-series value / value_scale
//   [1]      second-series value / value_scale (0 for simple charts)
//   [2..4]   one-hot chart type (bar, line, pie)
//   [5]      complexity flag
//   [6]      position index / (max_patches - 1)
//   [7]      category count / max_patches
//   [8..]    hashed category-label signature, then hashed title signature
#pragma once

#include <string>
#include <vector>

#include "cadpt/dataset.hpp"
#include "cadpt/random.hpp"
#include "cadpt/tensor.hpp"

namespace cadpt {

struct ChartEncoderConfig {
  std::size_t d_v = 48;
  std::size_t max_patches = 8;
  double value_scale = 100.0;

  static constexpr std::size_t kFixedFeatures = 8;

  void validate() const {
    if (d_v < kFixedFeatures + 2) {
      throw ContractError("chart encoder needs d_v >= " + std::to_string(kFixedFeatures + 2) + ", got " +
                          std::to_string(d_v));
    }
    if (max_patches == 0) throw ContractError("chart encoder needs max_patches >= 1");
    if (!(value_scale > 0)) throw ContractError("chart encoder needs a positive value scale");
  }

  std::size_t label_dims() const { return (d_v - kFixedFeatures) / 2; }
  std::size_t title_dims() const { return d_v - kFixedFeatures - label_dims(); }
};

namespace detail {
// Adds a +-1 signature derived from the word's hash into dst[0..n).
inline void add_word_signature(const std::string& word, float* dst, std::size_t n) {
  std::uint64_t state = fnv1a64(word);
  for (std::size_t i = 0; i < n; ++i) dst[i] += (splitmix64(state) & 1U) ? 1.0f : -1.0f;
}
}  // namespace detail

/// Featurizes a chart; identical specs give bit-identical output.
template <class T = float>
BasicTensor<T> encode_chart(const ChartSpec& spec, const ChartEncoderConfig& cfg) {
  cfg.validate();
  spec.validate();
  const std::size_t n = std::min(spec.categories.size(), cfg.max_patches);
  const std::size_t d = cfg.d_v;
  std::vector<float> title_sig(cfg.title_dims(), 0.0f);
  for (const auto& w : normalize_words(spec.title)) detail::add_word_signature(w, title_sig.data(), title_sig.size());
  std::vector<T> data(n * d, T{0});
  for (std::size_t i = 0; i < n; ++i) {
    T* row = data.data() + i * d;
    row[0] = static_cast<T>(spec.series[0][i] / cfg.value_scale);
    if (spec.series.size() > 1) row[1] = static_cast<T>(spec.series[1][i] / cfg.value_scale);
    row[2 + static_cast<int>(spec.chart_type)] = T{1};
    row[5] = spec.complexity == Complexity::kComplex ? T{1} : T{0};
    row[6] = cfg.max_patches > 1 ? static_cast<T>(static_cast<double>(i) / static_cast<double>(cfg.max_patches - 1)) : T{0};
    row[7] = static_cast<T>(static_cast<double>(spec.categories.size()) / static_cast<double>(cfg.max_patches));
    std::vector<float> label_sig(cfg.label_dims(), 0.0f);
    for (const auto& w : normalize_words(spec.categories[i]))
      detail::add_word_signature(w, label_sig.data(), label_sig.size());
    for (std::size_t j = 0; j < label_sig.size(); ++j) row[ChartEncoderConfig::kFixedFeatures + j] = label_sig[j];
    const std::size_t off = ChartEncoderConfig::kFixedFeatures + label_sig.size();
    for (std::size_t j = 0; j < title_sig.size(); ++j) row[off + j] = title_sig[j];
  }
  return BasicTensor<T>({n, d}, std::move(data));
}

}  // namespace cadpt
