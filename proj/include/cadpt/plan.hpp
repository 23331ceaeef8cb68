// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Stage plans: which parameter groups train in which stage, for the full
// three-stage schedule and each ablation variant.
#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cadpt/metrics.hpp"
#include "cadpt/params.hpp"

namespace cadpt {

struct StageSettings {
  std::size_t epochs = 1;
  std::size_t max_steps = 0;  // 0: run every epoch to completion
  double lr = 1e-3;
  std::size_t batch_size = 4;
};

struct TrainingConfig {
  StageSettings stage1{200, 500, 3e-4, 32};
  StageSettings stage2{20, 0, 1e-3, 4};
  StageSettings stage3{40, 0, 1e-3, 4};
  double temperature = 0.07;
  double clip_norm = 0.0;
  double threshold = 0.5;
  std::size_t max_decode_len = 64;
};

struct StagePlan {
  int stage = 1;
  std::vector<std::string> trainable;
  StageSettings settings;
};

enum class AblationVariant { kFull, kNoStage1, kNoStage2, kChaOnly, kLlmOnly };

inline const std::vector<AblationVariant>& all_variants() {
  static const std::vector<AblationVariant> v = {AblationVariant::kFull, AblationVariant::kNoStage1,
                                                 AblationVariant::kNoStage2, AblationVariant::kChaOnly,
                                                 AblationVariant::kLlmOnly};
  return v;
}

inline std::string to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "full";
    case AblationVariant::kNoStage1: return "no_stage1";
    case AblationVariant::kNoStage2: return "no_stage2";
    case AblationVariant::kChaOnly: return "cha_only";
    case AblationVariant::kLlmOnly: return "llm_only";
  }
  return "full";
}

inline AblationVariant parse_variant(const std::string& s) {
  for (auto v : all_variants())
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown variant '" + s + "' (expected full, no_stage1, no_stage2, cha_only, llm_only)");
}

namespace detail {
inline std::vector<std::string> names(std::initializer_list<std::string_view> groups) {
  std::vector<std::string> out;
  for (auto g : groups) out.emplace_back(g);
  return out;
}
}  // namespace detail

/// Trainable groups of the standard schedule.
inline std::vector<std::string> stage_groups(int stage) {
  using namespace group;
  switch (stage) {
    case 1: return detail::names({kProjector, kTextContrastHead});
    case 2:
      return detail::names({kProjector, kLatentQueries, kLatentMlp, kInteractionStack, kDecoderStack, kPrefixProjections});
    case 3:
      return detail::names(
          {kProjector, kLatentQueries, kLatentMlp, kInteractionStack, kDecoderStack, kPrefixProjections, kLm});
    default: throw ContractError("no stage " + std::to_string(stage));
  }
}

/// Adapter-only updates (the adapter groups and the prefix projections that feed the LM).
inline std::vector<std::string> adapter_only_groups() { return stage_groups(2); }

/// Latent queries and the language model only.
inline std::vector<std::string> llm_only_groups() { return detail::names({group::kLatentQueries, group::kLm}); }

/// Ordered stage plans a variant executes. Every variant except no_stage1 runs stage 1.
inline std::vector<StagePlan> variant_plans(AblationVariant v, const TrainingConfig& cfg) {
  std::vector<StagePlan> plans;
  auto add = [&](int stage, std::vector<std::string> groups) {
    const StageSettings& s = stage == 1 ? cfg.stage1 : (stage == 2 ? cfg.stage2 : cfg.stage3);
    plans.push_back({stage, std::move(groups), s});
  };
  switch (v) {
    case AblationVariant::kFull:
      add(1, stage_groups(1));
      add(2, stage_groups(2));
      add(3, stage_groups(3));
      break;
    case AblationVariant::kNoStage1:
      add(2, stage_groups(2));
      add(3, stage_groups(3));
      break;
    case AblationVariant::kNoStage2:
      add(1, stage_groups(1));
      add(3, stage_groups(3));
      break;
    case AblationVariant::kChaOnly:
      add(1, stage_groups(1));
      add(2, adapter_only_groups());
      add(3, adapter_only_groups());
      break;
    case AblationVariant::kLlmOnly:
      add(1, stage_groups(1));
      add(2, llm_only_groups());
      add(3, llm_only_groups());
      break;
  }
  return plans;
}

/// Sets requires_grad per group and returns the trainable parameters.
template <class T>
ParamList<T> apply_trainable(const ParamGroups<T>& groups, const std::vector<std::string>& trainable) {
  for (const auto& name : trainable) {
    if (!groups.count(name)) throw ContractError("unknown parameter group '" + name + "'");
  }
  ParamList<T> out;
  for (const auto& [name, params] : groups) {
    const bool on = std::find(trainable.begin(), trainable.end(), name) != trainable.end();
    for (auto p : params) {
      p.tensor.set_requires_grad(on);
      if (on) out.push_back(p);
    }
  }
  return out;
}

struct LossRecord {
  std::size_t step = 0;
  int stage = 0;
  double loss = 0;
};

struct TrainReport {
  int stage = 0;
  std::vector<double> losses;
  std::optional<RetrievalMetrics> retrieval;
  std::optional<double> token_accuracy;
  double initial_loss = 0;  // loss before the first update on the first batch

  std::vector<LossRecord> records() const {
    std::vector<LossRecord> out;
    for (std::size_t i = 0; i < losses.size(); ++i) out.push_back({i, stage, losses[i]});
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"stage", stage}, {"steps", losses.size()}, {"initial_loss", initial_loss}};
    if (!losses.empty()) j["final_loss"] = losses.back();
    if (retrieval) j["retrieval"] = cadpt::to_json(*retrieval);
    if (token_accuracy) j["token_accuracy"] = *token_accuracy;
    return j;
  }
};

/// Mean of the trailing `window` entries ending at index `end` (inclusive).
inline double smoothed(const std::vector<double>& v, std::size_t end, std::size_t window) {
  const std::size_t lo = end + 1 >= window ? end + 1 - window : 0;
  double s = 0;
  for (std::size_t i = lo; i <= end; ++i) s += v[i];
  return s / static_cast<double>(end + 1 - lo);
}

}  // namespace cadpt
