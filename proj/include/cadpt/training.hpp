// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Summarization stages, corpus evaluation, and the ablation pipeline.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "cadpt/contrastive.hpp"
#include "cadpt/metrics.hpp"
#include "cadpt/model.hpp"
#include "cadpt/optimizer.hpp"
#include "cadpt/plan.hpp"

namespace cadpt {

/// Worker count from CADPT_THREADS (default 1).
inline std::size_t thread_budget() {
  if (const char* env = std::getenv("CADPT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

namespace detail {

template <class T>
TrainReport run_summary_stage(ChartSummarizer<T>& model, const std::vector<ChartSample>& samples, const StagePlan& plan,
                              Rng& shuffle_rng, double clip_norm) {
  if (samples.empty()) throw ContractError("stage " + std::to_string(plan.stage) + ": empty dataset");
  if (std::find(plan.trainable.begin(), plan.trainable.end(), std::string(group::kTextContrastHead)) !=
      plan.trainable.end()) {
    throw ContractError("stage " + std::to_string(plan.stage) + ": the text contrast head only trains in stage 1");
  }
  auto params = apply_trainable(model.groups(), plan.trainable);
  Adam<T> opt(params, {plan.settings.lr, 0.9, 0.999, 1e-8, clip_norm});
  std::vector<PreparedSample<T>> data;
  for (const auto& s : samples) data.push_back(model.prepare(s));
  TrainReport rep;
  rep.stage = plan.stage;
  for (const auto& idx : batch_schedule(data.size(), plan.settings, 1, shuffle_rng)) {
    const T inv = T{1} / static_cast<T>(idx.size());
    double total = 0;
    for (auto i : idx) {
      auto loss = model.sample_loss(data[i]);
      total += loss.item();
      backward(scale(loss, inv));
    }
    opt.step();
    opt.zero_grad();
    rep.losses.push_back(total / static_cast<double>(idx.size()));
  }
  if (!rep.losses.empty()) rep.initial_loss = rep.losses.front();
  return rep;
}

}  // namespace detail

/// Adapter-side summarization training (the language model normally frozen).
template <class T>
TrainReport run_stage2(ChartSummarizer<T>& model, const std::vector<ChartSample>& samples, const StagePlan& plan,
                       Rng& shuffle_rng, double clip_norm = 0.0) {
  if (plan.stage != 2) throw ContractError("run_stage2: plan is for stage " + std::to_string(plan.stage));
  return detail::run_summary_stage(model, samples, plan, shuffle_rng, clip_norm);
}

/// Joint summarization training with the language model unfrozen.
template <class T>
TrainReport run_stage3(ChartSummarizer<T>& model, const std::vector<ChartSample>& samples, const StagePlan& plan,
                       Rng& shuffle_rng, double clip_norm = 0.0) {
  if (plan.stage != 3) throw ContractError("run_stage3: plan is for stage " + std::to_string(plan.stage));
  return detail::run_summary_stage(model, samples, plan, shuffle_rng, clip_norm);
}

/// Next-token accuracy under teacher forcing, pooled over all target tokens.
template <class T>
double token_accuracy(const ChartSummarizer<T>& model, const std::vector<ChartSample>& samples) {
  std::size_t hits = 0, total = 0;
  for (const auto& s : samples) {
    auto [h, n] = model.token_hits(model.prepare(s));
    hits += h;
    total += n;
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

/// Mean per-sample summarization loss without recording a graph.
template <class T>
double mean_loss(const ChartSummarizer<T>& model, const std::vector<ChartSample>& samples) {
  NoGradGuard guard;
  double total = 0;
  for (const auto& s : samples) total += model.sample_loss(model.prepare(s)).item();
  return samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
}

/// Greedy-decodes every sample and scores the corpus. Decoding fans out over
/// `threads` workers (0: CADPT_THREADS); results do not depend on the count.
template <class T>
EvalReport evaluate_corpus(const ChartSummarizer<T>& model, const std::vector<ChartSample>& samples,
                           std::size_t max_len = 64, std::size_t threads = 0) {
  if (samples.empty()) throw ContractError("evaluate_corpus: no samples");
  std::vector<std::string> hyps(samples.size()), refs, ids;
  for (const auto& s : samples) {
    refs.push_back(s.summary);
    ids.push_back(s.id);
  }
  const std::size_t workers = std::min(samples.size(), threads ? threads : thread_budget());
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < samples.size(); i += workers) hyps[i] = model.summarize(samples[i].spec, max_len);
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return score_corpus(hyps, refs, ids);
}

struct PipelineConfig {
  std::uint64_t seed = 1234;
  ModelConfig model;
  TrainingConfig training;
};

struct StageRecord {
  StagePlan plan;
  TrainReport report;
  std::map<std::string, std::uint64_t> before;
  std::map<std::string, std::uint64_t> after;
};

struct PipelineResult {
  AblationVariant variant = AblationVariant::kFull;
  std::map<std::string, std::uint64_t> initial;  // fingerprints at initialization
  std::vector<StageRecord> stages;
  EvalReport eval;
  double final_train_loss = 0;
  ChartSummarizer<float> model;

  const StageRecord* stage(int id) const {
    for (const auto& s : stages)
      if (s.plan.stage == id) return &s;
    return nullptr;
  }
};

using StageCallback = std::function<void(const StageRecord&, const ChartSummarizer<float>&)>;

/// Runs a variant's stages from a fixed seed, then evaluates on `eval`.
inline PipelineResult run_pipeline(AblationVariant variant, const std::vector<ChartSample>& train,
                                   const std::vector<ChartSample>& eval, const PipelineConfig& cfg,
                                   const Tokenizer& tokenizer, const StageCallback& on_stage = {}) {
  PipelineResult res;
  res.variant = variant;
  res.model = ChartSummarizer<float>(cfg.model, tokenizer, cfg.seed);
  Rng shuffle = derive_rng(cfg.seed, "shuffle");
  res.initial = fingerprints(res.model.groups());
  for (const auto& plan : variant_plans(variant, cfg.training)) {
    StageRecord rec;
    rec.plan = plan;
    rec.before = fingerprints(res.model.groups());
    switch (plan.stage) {
      case 1:
        rec.report = run_stage1(res.model, train, plan, cfg.training.temperature, cfg.training.threshold, shuffle,
                                cfg.training.clip_norm);
        break;
      case 2: rec.report = run_stage2(res.model, train, plan, shuffle, cfg.training.clip_norm); break;
      default:
        rec.report = run_stage3(res.model, train, plan, shuffle, cfg.training.clip_norm);
        rec.report.token_accuracy = token_accuracy(res.model, train);
        break;
    }
    rec.after = fingerprints(res.model.groups());
    res.stages.push_back(rec);
    if (on_stage) on_stage(res.stages.back(), res.model);
  }
  apply_trainable(res.model.groups(), {});
  res.final_train_loss = mean_loss(res.model, train);
  res.eval = evaluate_corpus(res.model, eval.empty() ? train : eval, cfg.training.max_decode_len);
  if (const auto* s1 = res.stage(1)) res.eval.contrastive = s1->report.retrieval;
  return res;
}

}  // namespace cadpt
