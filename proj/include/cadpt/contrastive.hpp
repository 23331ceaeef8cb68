// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Stage 1: contrastive alignment of the projector against a text tower, and
// the binary retrieval evaluation that accompanies it.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cadpt/metrics.hpp"
#include "cadpt/model.hpp"
#include "cadpt/ops.hpp"
#include "cadpt/optimizer.hpp"
#include "cadpt/plan.hpp"

namespace cadpt {

/// Symmetric InfoNCE with diagonal positives over B x d chart/text embeddings.
template <class T>
BasicTensor<T> info_nce_loss(const BasicTensor<T>& chart, const BasicTensor<T>& text, double temperature) {
  if (chart.rows() < 2 || chart.shape() != text.shape()) {
    throw ContractError("info_nce_loss: need matching B x d batches with B >= 2, got " + shape_str(chart.shape()) +
                        " and " + shape_str(text.shape()));
  }
  if (!(temperature > 0)) throw ContractError("info_nce_loss: temperature must be positive");
  const std::size_t b = chart.rows();
  auto logits = scale(matmul(l2_normalize_rows(chart), transpose(l2_normalize_rows(text))),
                      static_cast<T>(1.0 / temperature));
  std::vector<std::int64_t> diag(b);
  std::iota(diag.begin(), diag.end(), std::int64_t{0});
  auto rows = cross_entropy_logits(logits, diag);
  auto cols = cross_entropy_logits(transpose(logits), diag);
  return scale(add(rows, cols), static_cast<T>(0.5));
}

/// Cosine similarities between every chart row and every text row.
template <class T>
BasicTensor<T> cosine_similarity(const BasicTensor<T>& chart, const BasicTensor<T>& text) {
  NoGradGuard guard;
  return matmul(l2_normalize_rows(chart), transpose(l2_normalize_rows(text)));
}

/// Binary metrics from scored positives and negatives. A pair is predicted
/// positive when its score is >= threshold; AUC is the Mann-Whitney statistic
/// with ties counted half.
inline RetrievalMetrics binary_metrics(const std::vector<double>& positives, const std::vector<double>& negatives,
                                       double threshold) {
  if (positives.empty() || negatives.empty()) throw ContractError("binary_metrics: need positives and negatives");
  struct Scored {
    double s;
    bool pos;
  };
  std::vector<Scored> all;
  for (double s : positives) all.push_back({s, true});
  for (double s : negatives) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.s < b.s; });
  double rank_sum = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].s == all[i].s) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (all[k].pos) rank_sum += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(positives.size()), nn = static_cast<double>(negatives.size());
  RetrievalMetrics m;
  m.threshold = threshold;
  m.auc = (rank_sum - np * (np + 1) / 2) / (np * nn);
  double tp = 0, fp = 0;
  for (double s : positives) tp += s >= threshold ? 1 : 0;
  for (double s : negatives) fp += s >= threshold ? 1 : 0;
  const double tn = nn - fp;
  m.accuracy = (tp + tn) / (np + nn);
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp / np;
  m.f1 = harmonic_f1(m.precision, m.recall);
  return m;
}

/// Diagonal entries of a B x B score matrix are positives, the rest negatives.
template <class T>
RetrievalMetrics retrieval_binary_metrics(const BasicTensor<T>& scores, double threshold) {
  if (scores.rank() != 2 || scores.rows() != scores.cols() || scores.rows() < 2) {
    throw ContractError("retrieval_binary_metrics: need a square score matrix with B >= 2");
  }
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.rows(); ++i)
    for (std::size_t j = 0; j < scores.cols(); ++j) (i == j ? pos : neg).push_back(scores.at(i, j));
  return binary_metrics(pos, neg, threshold);
}

/// Chart and text embeddings for a batch of prepared samples.
template <class T>
std::pair<BasicTensor<T>, BasicTensor<T>> contrastive_batch(const ChartSummarizer<T>& model,
                                                            const std::vector<const PreparedSample<T>*>& batch) {
  std::vector<BasicTensor<T>> charts, texts;
  for (const auto* s : batch) {
    charts.push_back(model.chart_embedding(s->features));
    texts.push_back(model.text_embedding(s->summary_ids));
  }
  return {concat_rows(charts), concat_rows(texts)};
}

/// Retrieval metrics pooled over consecutive batches of `batch_size` (the last
/// short batch is kept when it has at least two samples).
template <class T>
RetrievalMetrics evaluate_retrieval(const ChartSummarizer<T>& model, const std::vector<PreparedSample<T>>& data,
                                    std::size_t batch_size, double threshold) {
  NoGradGuard guard;
  std::vector<double> pos, neg;
  for (std::size_t start = 0; start + 2 <= data.size(); start += batch_size) {
    std::vector<const PreparedSample<T>*> batch;
    for (std::size_t i = start; i < std::min(data.size(), start + batch_size); ++i) batch.push_back(&data[i]);
    auto [c, t] = contrastive_batch(model, batch);
    auto s = cosine_similarity(c, t);
    for (std::size_t i = 0; i < s.rows(); ++i)
      for (std::size_t j = 0; j < s.cols(); ++j) (i == j ? pos : neg).push_back(s.at(i, j));
  }
  return binary_metrics(pos, neg, threshold);
}

namespace detail {
// Shuffled minibatch schedule; batches shorter than min_batch are dropped.
inline std::vector<std::vector<std::size_t>> batch_schedule(std::size_t n, const StageSettings& s, std::size_t min_batch,
                                                            Rng& rng) {
  const std::size_t b = std::max<std::size_t>(1, std::min(s.batch_size, n));
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t e = 0; e < s.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += b) {
      const std::size_t end = std::min(n, start + b);
      if (end - start < min_batch) continue;
      out.emplace_back(order.begin() + start, order.begin() + end);
      if (s.max_steps && out.size() == s.max_steps) return out;
    }
  }
  return out;
}
}  // namespace detail

/// Optimizes InfoNCE over the dataset with only the plan's groups trainable.
template <class T>
TrainReport run_stage1(ChartSummarizer<T>& model, const std::vector<ChartSample>& samples, const StagePlan& plan,
                       double temperature, double threshold, Rng& shuffle_rng, double clip_norm = 0.0) {
  if (plan.stage != 1) throw ContractError("run_stage1: plan is for stage " + std::to_string(plan.stage));
  const auto allowed = stage_groups(1);
  if (plan.trainable.empty()) throw ContractError("run_stage1: no trainable groups");
  for (const auto& g : plan.trainable) {
    if (std::find(allowed.begin(), allowed.end(), g) == allowed.end()) {
      throw ContractError("run_stage1: group '" + g + "' may not train in stage 1");
    }
  }
  if (samples.size() < 2) throw ContractError("run_stage1: need at least two samples");
  auto params = apply_trainable(model.groups(), plan.trainable);
  Adam<T> opt(params, {plan.settings.lr, 0.9, 0.999, 1e-8, clip_norm});
  std::vector<PreparedSample<T>> data;
  for (const auto& s : samples) data.push_back(model.prepare(s));
  TrainReport rep;
  rep.stage = 1;
  for (const auto& idx : detail::batch_schedule(data.size(), plan.settings, 2, shuffle_rng)) {
    std::vector<const PreparedSample<T>*> batch;
    for (auto i : idx) batch.push_back(&data[i]);
    auto [c, t] = contrastive_batch(model, batch);
    auto loss = info_nce_loss(c, t, temperature);
    backward(loss);
    opt.step();
    opt.zero_grad();
    rep.losses.push_back(loss.item());
  }
  if (!rep.losses.empty()) rep.initial_loss = rep.losses.front();
  rep.retrieval = evaluate_retrieval(model, data, std::max<std::size_t>(2, plan.settings.batch_size), threshold);
  return rep;
}

}  // namespace cadpt
