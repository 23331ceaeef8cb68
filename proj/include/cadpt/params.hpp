// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cadpt/random.hpp"
#include "cadpt/tensor.hpp"

namespace cadpt {

namespace group {
inline constexpr std::string_view kProjector = "projector";
inline constexpr std::string_view kLatentQueries = "latent_queries";
inline constexpr std::string_view kLatentMlp = "latent_mlp";
inline constexpr std::string_view kInteractionStack = "interaction_stack";
inline constexpr std::string_view kDecoderStack = "decoder_stack";
inline constexpr std::string_view kLm = "lm";
inline constexpr std::string_view kPrefixProjections = "prefix_projections";
inline constexpr std::string_view kTextContrastHead = "text_contrast_head";

inline constexpr std::array<std::string_view, 8> kAll = {
    kProjector, kLatentQueries,     kLatentMlp, kInteractionStack, kDecoderStack,
    kLm,        kPrefixProjections, kTextContrastHead};

/// Groups that make up the adapter itself.
inline constexpr std::array<std::string_view, 5> kAdapter = {kProjector, kLatentQueries, kLatentMlp,
                                                              kInteractionStack, kDecoderStack};
}  // namespace group

template <class T>
struct NamedParam {
  std::string name;
  BasicTensor<T> tensor;
};

template <class T>
using ParamList = std::vector<NamedParam<T>>;

/// Named parameter groups in a fixed order; every parameter belongs to exactly one group.
template <class T>
using ParamGroups = std::map<std::string, ParamList<T>, std::less<>>;

/// 64-bit FNV-1a over the shapes and raw bytes of a parameter list.
template <class T>
std::uint64_t fingerprint(const ParamList<T>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : params) {
    mix(p.name.data(), p.name.size());
    for (auto d : p.tensor.shape()) mix(&d, sizeof(d));
    mix(p.tensor.data().data(), p.tensor.size() * sizeof(T));
  }
  return h;
}

template <class T>
std::map<std::string, std::uint64_t> fingerprints(const ParamGroups<T>& groups) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& [name, params] : groups) out[name] = fingerprint(params);
  return out;
}

template <class T>
std::size_t parameter_count(const ParamList<T>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.size();
  return n;
}

}  // namespace cadpt
