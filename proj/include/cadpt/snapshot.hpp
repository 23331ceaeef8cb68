// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Whole-model checkpoints: the parameter groups plus a config echo carrying
// everything needed to rebuild the model (run config, vocabulary, variant and
// stage), so a checkpoint file is self-contained.
#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "cadpt/checkpoint.hpp"
#include "cadpt/config.hpp"

namespace cadpt {

struct ModelSnapshot {
  RunConfig run;
  std::string variant;
  int stage = 0;
  ChartSummarizer<float> model;
};

inline std::string snapshot_config(const RunConfig& run, const Tokenizer& tokenizer, const std::string& variant,
                                   int stage) {
  nlohmann::json j = {{"run", to_json(run)}, {"variant", variant}, {"stage", stage}, {"vocabulary", tokenizer.vocabulary()}};
  return j.dump();
}

inline void save_model(const std::string& path, const ChartSummarizer<float>& model, const RunConfig& run,
                       const std::string& variant, int stage) {
  save_checkpoint(path, model.groups(), snapshot_config(run, model.tokenizer(), variant, stage));
}

inline ModelSnapshot restore_model(const Checkpoint& ck) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ck.config);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint config echo is not JSON: ") + e.what());
  }
  if (!j.contains("run") || !j.contains("vocabulary")) throw CheckpointError("checkpoint config echo lacks run/vocabulary");
  ModelSnapshot s;
  s.run = run_config_from_json(j.at("run"));
  s.variant = j.value("variant", std::string());
  s.stage = j.value("stage", 0);
  auto tokenizer = Tokenizer::from_vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
  s.model = ChartSummarizer<float>(s.run.model, std::move(tokenizer), s.run.seed);
  apply_checkpoint(ck, s.model.groups());
  apply_trainable(s.model.groups(), {});
  return s;
}

inline ModelSnapshot load_model(const std::string& path) { return restore_model(load_checkpoint(path)); }

}  // namespace cadpt
