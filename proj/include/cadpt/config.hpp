// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration as JSON. Every key is optional; missing keys keep their
// defaults.
//
//   {
//     "seed": 1234,
//     "adapter":  {"d_v", "d_t", "n_q", "n_layers", "n_heads", "d_hidden_mlp", "d_ff"},
//     "lm":       {"d_l", "n_blocks", "n_heads", "d_ff", "max_seq"},
//     "encoder":  {"max_patches", "value_scale"},
//     "prompt":   "summarize this chart",
//     "training": {"stage1": {"epochs", "max_steps", "lr", "batch_size"}, "stage2": {...}, "stage3": {...},
//                  "temperature", "clip_norm", "threshold", "max_decode_len"},
//     "data":     {"path", "n", "seed", "train_limit", "eval_split"}
//   }
#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "cadpt/training.hpp"

namespace cadpt {

struct DataConfig {
  std::string path;             // JSONL manifest; empty means synthesize
  std::size_t n = 400;          // synthetic sample count
  std::uint64_t seed = 7;       // synthetic corpus seed
  std::size_t train_limit = 0;  // keep at most this many training samples (0: all)
  std::string eval_split = "test";
};

struct RunConfig {
  std::uint64_t seed = 1234;
  ModelConfig model;
  TrainingConfig training;
  DataConfig data;

  PipelineConfig pipeline() const { return {seed, model, training}; }
};

namespace detail {
inline void read_stage(const nlohmann::json& j, StageSettings& s) {
  s.epochs = j.value("epochs", s.epochs);
  s.max_steps = j.value("max_steps", s.max_steps);
  s.lr = j.value("lr", s.lr);
  s.batch_size = j.value("batch_size", s.batch_size);
}
inline nlohmann::json write_stage(const StageSettings& s) {
  return {{"epochs", s.epochs}, {"max_steps", s.max_steps}, {"lr", s.lr}, {"batch_size", s.batch_size}};
}
}  // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
  const auto& a = c.model.adapter;
  const auto& l = c.model.lm;
  const auto& t = c.training;
  return {{"seed", c.seed},
          {"adapter",
           {{"d_v", a.d_v}, {"d_t", a.d_t}, {"n_q", a.n_q}, {"n_layers", a.n_layers}, {"n_heads", a.n_heads},
            {"d_hidden_mlp", a.d_hidden_mlp}, {"d_ff", a.d_ff}}},
          {"lm", {{"d_l", l.d_l}, {"n_blocks", l.n_blocks}, {"n_heads", l.n_heads}, {"d_ff", l.d_ff}, {"max_seq", l.max_seq}}},
          {"encoder", {{"max_patches", c.model.encoder.max_patches}, {"value_scale", c.model.encoder.value_scale}}},
          {"prompt", c.model.prompt},
          {"training",
           {{"stage1", detail::write_stage(t.stage1)},
            {"stage2", detail::write_stage(t.stage2)},
            {"stage3", detail::write_stage(t.stage3)},
            {"temperature", t.temperature},
            {"clip_norm", t.clip_norm},
            {"threshold", t.threshold},
            {"max_decode_len", t.max_decode_len}}},
          {"data",
           {{"path", c.data.path}, {"n", c.data.n}, {"seed", c.data.seed}, {"train_limit", c.data.train_limit},
            {"eval_split", c.data.eval_split}}}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.seed = j.value("seed", c.seed);
  if (j.contains("adapter")) {
    const auto& a = j.at("adapter");
    auto& d = c.model.adapter;
    d.d_v = a.value("d_v", d.d_v);
    d.d_t = a.value("d_t", d.d_t);
    d.n_q = a.value("n_q", d.n_q);
    d.n_layers = a.value("n_layers", d.n_layers);
    d.n_heads = a.value("n_heads", d.n_heads);
    d.d_hidden_mlp = a.value("d_hidden_mlp", d.d_hidden_mlp);
    d.d_ff = a.value("d_ff", d.d_ff);
  }
  if (j.contains("lm")) {
    const auto& l = j.at("lm");
    auto& d = c.model.lm;
    d.d_l = l.value("d_l", d.d_l);
    d.n_blocks = l.value("n_blocks", d.n_blocks);
    d.n_heads = l.value("n_heads", d.n_heads);
    d.d_ff = l.value("d_ff", d.d_ff);
    d.max_seq = l.value("max_seq", d.max_seq);
  }
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    c.model.encoder.max_patches = e.value("max_patches", c.model.encoder.max_patches);
    c.model.encoder.value_scale = e.value("value_scale", c.model.encoder.value_scale);
  }
  c.model.encoder.d_v = c.model.adapter.d_v;
  c.model.prompt = j.value("prompt", c.model.prompt);
  if (j.contains("training")) {
    const auto& t = j.at("training");
    auto& d = c.training;
    if (t.contains("stage1")) detail::read_stage(t.at("stage1"), d.stage1);
    if (t.contains("stage2")) detail::read_stage(t.at("stage2"), d.stage2);
    if (t.contains("stage3")) detail::read_stage(t.at("stage3"), d.stage3);
    d.temperature = t.value("temperature", d.temperature);
    d.clip_norm = t.value("clip_norm", d.clip_norm);
    d.threshold = t.value("threshold", d.threshold);
    d.max_decode_len = t.value("max_decode_len", d.max_decode_len);
  }
  if (j.contains("data")) {
    const auto& dj = j.at("data");
    c.data.path = dj.value("path", c.data.path);
    c.data.n = dj.value("n", c.data.n);
    c.data.seed = dj.value("seed", c.data.seed);
    c.data.train_limit = dj.value("train_limit", c.data.train_limit);
    c.data.eval_split = dj.value("eval_split", c.data.eval_split);
  }
  c.model.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

/// Train and evaluation samples for a run. eval_split "train" evaluates on the
/// training samples themselves (overfit runs).
struct RunData {
  std::vector<ChartSample> train;
  std::vector<ChartSample> eval;
};

inline RunData load_run_data(const DataConfig& d) {
  auto all = d.path.empty() ? generate_synthetic(d.n, d.seed) : load_jsonl(d.path);
  RunData out;
  out.train = filter_split(all, Split::kTrain);
  if (d.train_limit && out.train.size() > d.train_limit) out.train.resize(d.train_limit);
  out.eval = d.eval_split == "train" ? out.train : filter_split(all, parse_split(d.eval_split));
  return out;
}

/// Closed synthetic vocabulary extended with any words the samples add.
inline Tokenizer tokenizer_for(const std::vector<ChartSample>& samples) {
  auto words = closed_vocabulary_words();
  for (const auto& s : samples) {
    auto w = normalize_words(s.summary);
    words.insert(words.end(), w.begin(), w.end());
  }
  return Tokenizer(std::move(words));
}

}  // namespace cadpt
