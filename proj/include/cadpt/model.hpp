// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Chart encoder + adapter + prefix projections + language model, plus the
// text-side head used only for contrastive alignment.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cadpt/adapter.hpp"
#include "cadpt/dataset.hpp"
#include "cadpt/encoder.hpp"
#include "cadpt/lm.hpp"
#include "cadpt/params.hpp"
#include "cadpt/text.hpp"

namespace cadpt {

struct ModelConfig {
  AdapterConfig adapter;
  TinyLMConfig lm;  // vocab_size is taken from the tokenizer
  ChartEncoderConfig encoder;
  std::string prompt = "summarize this chart";

  void validate() const {
    adapter.validate();
    encoder.validate();
    if (encoder.d_v != adapter.d_v) {
      throw ContractError("encoder d_v=" + std::to_string(encoder.d_v) + " differs from adapter d_v=" +
                          std::to_string(adapter.d_v));
    }
  }
};

/// A chart prepared for training: encoder features and target ids (ending in <eos>).
template <class T>
struct PreparedSample {
  BasicTensor<T> features;
  std::vector<std::int64_t> target;
  std::vector<std::int64_t> summary_ids;  // target without <eos>
};

template <class T>
class ChartSummarizer {
 public:
  ChartSummarizer() = default;

  ChartSummarizer(ModelConfig cfg, Tokenizer tokenizer, std::uint64_t seed)
      : cfg_(std::move(cfg)), tokenizer_(std::move(tokenizer)) {
    cfg_.lm.vocab_size = tokenizer_.size();
    cfg_.validate();
    Rng rng = derive_rng(seed, "init");
    adapter_ = ChartAdapter<T>(cfg_.adapter, rng);
    lm_ = TinyLM<T>(cfg_.lm, rng);
    prefix_ = PrefixComposition<T>::init(cfg_.lm.d_l, cfg_.adapter.d_v, cfg_.adapter.d_t, rng);
    text_head_ = Linear<T>::init(cfg_.lm.d_l, cfg_.adapter.d_t, rng);
    prompt_ids_ = tokenizer_.encode(cfg_.prompt);
  }

  const ModelConfig& config() const { return cfg_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }
  const ChartAdapter<T>& adapter() const { return adapter_; }
  ChartAdapter<T>& adapter() { return adapter_; }
  const TinyLM<T>& lm() const { return lm_; }
  const PrefixComposition<T>& prefix_projections() const { return prefix_; }
  const Linear<T>& text_head() const { return text_head_; }
  const std::vector<std::int64_t>& prompt_ids() const { return prompt_ids_; }

  BasicTensor<T> features(const ChartSpec& spec) const { return encode_chart<T>(spec, cfg_.encoder); }

  PreparedSample<T> prepare(const ChartSample& s) const {
    PreparedSample<T> p;
    p.features = features(s.spec);
    p.summary_ids = tokenizer_.encode(s.summary);
    p.target = p.summary_ids;
    p.target.push_back(Tokenizer::kEos);
    return p;
  }

  /// Adapter pass plus the raw (un-positioned) LM prefix [p][r W_r^T][g W_g^T].
  struct PrefixPass {
    AdapterOutput<T> adapter;
    BasicTensor<T> prefix;
  };

  PrefixPass prefix_pass(const BasicTensor<T>& x) const {
    PrefixPass out;
    out.adapter = adapter_.forward(x);
    out.prefix = compose_prefix(prompt_ids_, out.adapter.r, out.adapter.g, prefix_, lm_);
    return out;
  }

  BasicTensor<T> sample_loss(const PreparedSample<T>& s) const {
    auto pass = prefix_pass(s.features);
    return lm_loss(lm_, compose_stream(pass.prefix, shifted_stream(s.target), lm_), s.target);
  }

  /// Teacher-forced argmax hits and target count for one sample.
  std::pair<std::size_t, std::size_t> token_hits(const PreparedSample<T>& s) const {
    NoGradGuard guard;
    auto pass = prefix_pass(s.features);
    auto logits = lm_.logits(compose_stream(pass.prefix, shifted_stream(s.target), lm_));
    const std::size_t v = logits.cols(), offset = logits.rows() - s.target.size();
    std::size_t hits = 0;
    for (std::size_t t = 0; t < s.target.size(); ++t) {
      auto row = logits.data().subspan((offset + t) * v, v);
      const auto arg = static_cast<std::int64_t>(std::max_element(row.begin(), row.end()) - row.begin());
      hits += arg == s.target[t] ? 1 : 0;
    }
    return {hits, s.target.size()};
  }

  std::vector<std::int64_t> generate_ids(const BasicTensor<T>& x, std::size_t max_len) const {
    NoGradGuard guard;
    return generate_greedy(lm_, prefix_pass(x).prefix, max_len);
  }

  std::string summarize(const ChartSpec& spec, std::size_t max_len = 64) const {
    return tokenizer_.decode(generate_ids(features(spec), max_len));
  }

  /// Mean-pooled projected patches, 1 x d_t.
  BasicTensor<T> chart_embedding(const BasicTensor<T>& x) const { return mean_rows(project(x, adapter_.projector())); }

  /// Mean-pooled summary token embeddings through the contrast head, 1 x d_t.
  BasicTensor<T> text_embedding(const std::vector<std::int64_t>& summary_ids) const {
    return text_head_(mean_rows(lm_.embed_tokens(summary_ids)));
  }

  ParamGroups<T> groups() const {
    ParamGroups<T> g;
    adapter_.add_groups(g);
    g[std::string(group::kLm)] = lm_.parameters();
    g[std::string(group::kPrefixProjections)] = prefix_.parameters();
    ParamList<T> head;
    text_head_.collect(head, "text_contrast_head");
    g[std::string(group::kTextContrastHead)] = head;
    return g;
  }

 private:
  ModelConfig cfg_;
  Tokenizer tokenizer_;
  ChartAdapter<T> adapter_;
  TinyLM<T> lm_;
  PrefixComposition<T> prefix_;
  Linear<T> text_head_;
  std::vector<std::int64_t> prompt_ids_;
};

}  // namespace cadpt
