// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tiny decoder-only language model and the prefix composition that feeds it
// the adapter outputs. The composed sequence is
//
//   [prompt tokens][r rows * W_r^T][g rows * W_g^T][<bos> summary ...]
//
// with learned positional embeddings over the whole sequence.
#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "cadpt/attention.hpp"
#include "cadpt/ops.hpp"
#include "cadpt/params.hpp"
#include "cadpt/random.hpp"
#include "cadpt/text.hpp"

namespace cadpt {

class LengthError : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct TinyLMConfig {
  std::size_t vocab_size = 0;
  std::size_t d_l = 64;
  std::size_t n_blocks = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_seq = 128;

  void validate() const {
    if (vocab_size == 0 || d_l == 0 || n_blocks == 0 || n_heads == 0 || d_ff == 0 || max_seq == 0) {
      throw ContractError("language model config: every dimension must be at least 1");
    }
    if (d_l % n_heads != 0) throw ContractError("language model config: d_l is not divisible by n_heads");
  }
};

/// Pre-norm causal self-attention block.
template <class T>
struct DecoderBlock {
  LayerNorm<T> ln_attn, ln_ffn;
  Linear<T> wq, wk, wv, wo, ff_in, ff_out;
  std::size_t n_heads = 1;

  static DecoderBlock init(const TinyLMConfig& cfg, Rng& rng) {
    DecoderBlock b;
    b.ln_attn = LayerNorm<T>::init(cfg.d_l);
    b.wq = Linear<T>::init(cfg.d_l, cfg.d_l, rng);
    b.wk = Linear<T>::init_unbiased(cfg.d_l, cfg.d_l, rng);
    b.wv = Linear<T>::init(cfg.d_l, cfg.d_l, rng);
    b.wo = Linear<T>::init(cfg.d_l, cfg.d_l, rng);
    b.ln_ffn = LayerNorm<T>::init(cfg.d_l);
    b.ff_in = Linear<T>::init(cfg.d_l, cfg.d_ff, rng);
    b.ff_out = Linear<T>::init(cfg.d_ff, cfg.d_l, rng);
    b.n_heads = cfg.n_heads;
    return b;
  }

  BasicTensor<T> forward(const BasicTensor<T>& x) const {
    auto n = ln_attn(x);
    auto x1 = add(x, wo(multi_head_attention(wq(n), wk(n), wv(n), n_heads, true)));
    return add(x1, ff_out(relu(ff_in(ln_ffn(x1)))));
  }

  void collect(ParamList<T>& out, const std::string& prefix) const {
    ln_attn.collect(out, prefix + ".ln_attn");
    wq.collect(out, prefix + ".wq");
    wk.collect(out, prefix + ".wk");
    wv.collect(out, prefix + ".wv");
    wo.collect(out, prefix + ".wo");
    ln_ffn.collect(out, prefix + ".ln_ffn");
    ff_in.collect(out, prefix + ".ff_in");
    ff_out.collect(out, prefix + ".ff_out");
  }
};

template <class T>
class TinyLM {
 public:
  TinyLM() = default;

  TinyLM(const TinyLMConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg.validate();
    token_embedding_ = normal_scaled<T>(cfg.vocab_size, cfg.d_l, 0.02, rng);
    position_embedding_ = normal_scaled<T>(cfg.max_seq, cfg.d_l, 0.02, rng);
    for (std::size_t i = 0; i < cfg.n_blocks; ++i) blocks_.push_back(DecoderBlock<T>::init(cfg, rng));
    ln_final_ = LayerNorm<T>::init(cfg.d_l);
    head_ = Linear<T>::init(cfg.d_l, cfg.vocab_size, rng);
  }

  const TinyLMConfig& config() const { return cfg_; }
  const BasicTensor<T>& token_embedding() const { return token_embedding_; }

  BasicTensor<T> embed_tokens(const std::vector<std::int64_t>& ids) const { return embedding(token_embedding_, ids); }

  /// Adds positional embeddings 0..n-1 to an n x d_l sequence.
  BasicTensor<T> add_positions(const BasicTensor<T>& seq) const {
    if (seq.rows() > cfg_.max_seq) {
      throw LengthError("composed sequence of " + std::to_string(seq.rows()) + " positions exceeds capacity " +
                        std::to_string(cfg_.max_seq));
    }
    return add(seq, slice_rows(position_embedding_, 0, seq.rows()));
  }

  /// Logits (n x vocab) for a positioned embedding sequence.
  BasicTensor<T> logits(const BasicTensor<T>& positioned) const {
    auto x = positioned;
    for (const auto& b : blocks_) x = b.forward(x);
    return head_(ln_final_(x));
  }

  ParamList<T> parameters() const {
    ParamList<T> out{{"lm.token_embedding", token_embedding_}, {"lm.position_embedding", position_embedding_}};
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(out, "lm.block" + std::to_string(i));
    ln_final_.collect(out, "lm.ln_final");
    head_.collect(out, "lm.head");
    return out;
  }

 private:
  TinyLMConfig cfg_;
  BasicTensor<T> token_embedding_;     // vocab x d_l
  BasicTensor<T> position_embedding_;  // max_seq x d_l
  std::vector<DecoderBlock<T>> blocks_;
  LayerNorm<T> ln_final_;
  Linear<T> head_;
};

/// Input projections that bring r (d_v wide) and g (d_t wide) into the LM width.
template <class T>
struct PrefixComposition {
  BasicTensor<T> w_r;  // d_l x d_v
  BasicTensor<T> w_g;  // d_l x d_t

  static PrefixComposition init(std::size_t d_l, std::size_t d_v, std::size_t d_t, Rng& rng) {
    return {uniform_fan_in<T>(d_l, d_v, d_v, rng), uniform_fan_in<T>(d_l, d_t, d_t, rng)};
  }

  ParamList<T> parameters() const {
    return {{"prefix_projections.W_r", w_r}, {"prefix_projections.W_g", w_g}};
  }
};

/// Prompt, r and g segments before positional embeddings. Empty segments
/// (no prompt ids, undefined r or g) are skipped; an all-empty prefix is undefined.
template <class T>
BasicTensor<T> compose_prefix(const std::vector<std::int64_t>& prompt, const BasicTensor<T>& r, const BasicTensor<T>& g,
                              const PrefixComposition<T>& comp, const TinyLM<T>& lm) {
  std::vector<BasicTensor<T>> parts;
  if (!prompt.empty()) parts.push_back(lm.embed_tokens(prompt));
  if (r.defined()) {
    if (r.cols() != comp.w_r.cols()) {
      throw ShapeError("compose: r " + shape_str(r.shape()) + " does not match W_r " + shape_str(comp.w_r.shape()));
    }
    parts.push_back(matmul(r, transpose(comp.w_r)));
  }
  if (g.defined()) {
    if (g.cols() != comp.w_g.cols()) {
      throw ShapeError("compose: g " + shape_str(g.shape()) + " does not match W_g " + shape_str(comp.w_g.shape()));
    }
    parts.push_back(matmul(g, transpose(comp.w_g)));
  }
  if (parts.empty()) return {};
  return parts.size() == 1 ? parts.front() : concat_rows(parts);
}

/// Appends the embedded token stream to a raw prefix and applies positions.
template <class T>
BasicTensor<T> compose_stream(const BasicTensor<T>& prefix, const std::vector<std::int64_t>& stream, const TinyLM<T>& lm) {
  std::vector<BasicTensor<T>> parts;
  if (prefix.defined()) parts.push_back(prefix);
  if (!stream.empty()) parts.push_back(lm.embed_tokens(stream));
  if (parts.empty()) throw ContractError("compose: empty sequence");
  const std::size_t rows = (prefix.defined() ? prefix.rows() : 0) + stream.size();
  if (rows > lm.config().max_seq) {
    throw LengthError("composed sequence of " + std::to_string(rows) + " positions exceeds capacity " +
                      std::to_string(lm.config().max_seq));
  }
  return lm.add_positions(parts.size() == 1 ? parts.front() : concat_rows(parts));
}

/// Full composed input: prompt, r, g, then the summary stream, with positions.
template <class T>
BasicTensor<T> compose_input(const std::vector<std::int64_t>& prompt, const BasicTensor<T>& r, const BasicTensor<T>& g,
                             const std::vector<std::int64_t>& stream, const PrefixComposition<T>& comp,
                             const TinyLM<T>& lm) {
  return compose_stream(compose_prefix(prompt, r, g, comp, lm), stream, lm);
}

/// Teacher-forcing stream for a target: <bos> followed by all but its last token.
inline std::vector<std::int64_t> shifted_stream(const std::vector<std::int64_t>& target) {
  std::vector<std::int64_t> s{Tokenizer::kBos};
  s.insert(s.end(), target.begin(), target.end() - 1);
  return s;
}

/// Labels for a composed sequence: prefix positions ignored, then the target.
inline std::vector<std::int64_t> masked_labels(std::size_t prefix_len, const std::vector<std::int64_t>& target) {
  std::vector<std::int64_t> labels(prefix_len, kIgnoreIndex);
  labels.insert(labels.end(), target.begin(), target.end());
  return labels;
}

/// Mean cross-entropy over the trailing target positions of a composed sequence.
template <class T>
BasicTensor<T> lm_loss(const TinyLM<T>& lm, const BasicTensor<T>& composed, const std::vector<std::int64_t>& target) {
  if (target.empty()) throw ContractError("lm_loss: empty target");
  if (target.back() != Tokenizer::kEos) throw ContractError("lm_loss: target must end with <eos>");
  if (composed.rows() < target.size()) throw ContractError("lm_loss: composed sequence shorter than target");
  return cross_entropy_logits(lm.logits(composed), masked_labels(composed.rows() - target.size(), target));
}

/// Greedy decoding from <bos>; stops at <eos> (not returned) or after max_len tokens.
template <class T>
std::vector<std::int64_t> generate_greedy(const TinyLM<T>& lm, const BasicTensor<T>& prefix, std::size_t max_len) {
  if (max_len == 0) throw ContractError("generate_greedy: max_len must be at least 1");
  NoGradGuard guard;
  std::vector<std::int64_t> stream{Tokenizer::kBos};
  std::vector<std::int64_t> out;
  const std::size_t prefix_rows = prefix.defined() ? prefix.rows() : 0;
  while (out.size() < max_len && prefix_rows + stream.size() <= lm.config().max_seq) {
    auto logits = lm.logits(compose_stream(prefix, stream, lm));
    const auto row = logits.data().subspan((logits.rows() - 1) * logits.cols(), logits.cols());
    const auto next = static_cast<std::int64_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (next == Tokenizer::kEos) break;
    out.push_back(next);
    stream.push_back(next);
  }
  return out;
}

}  // namespace cadpt
