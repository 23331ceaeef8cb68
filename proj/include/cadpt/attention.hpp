// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Building blocks shared by the adapter's cross-attention stacks and the
// decoder-only language model.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cadpt/ops.hpp"
#include "cadpt/params.hpp"
#include "cadpt/random.hpp"

namespace cadpt {

template <class T>
struct Linear {
  BasicTensor<T> weight;  // in x out
  BasicTensor<T> bias;    // 1 x out, or undefined for a bias-free map

  static Linear init(std::size_t in, std::size_t out, Rng& rng) {
    return {uniform_fan_in<T>(in, out, in, rng), BasicTensor<T>::zeros({1, out}, true)};
  }

  static Linear init_unbiased(std::size_t in, std::size_t out, Rng& rng) {
    return {uniform_fan_in<T>(in, out, in, rng), BasicTensor<T>()};
  }

  static Linear identity(std::size_t n) {
    return {BasicTensor<T>::identity(n, true), BasicTensor<T>::zeros({1, n}, true)};
  }

  BasicTensor<T> operator()(const BasicTensor<T>& x) const {
    return bias.defined() ? linear(x, weight, bias) : matmul(x, weight);
  }

  void collect(ParamList<T>& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight});
    if (bias.defined()) out.push_back({prefix + ".bias", bias});
  }
};

template <class T>
struct LayerNorm {
  BasicTensor<T> gamma;
  BasicTensor<T> beta;

  static LayerNorm init(std::size_t n) {
    return {BasicTensor<T>::full({1, n}, T{1}, true), BasicTensor<T>::zeros({1, n}, true)};
  }

  BasicTensor<T> operator()(const BasicTensor<T>& x) const { return layer_norm(x, gamma, beta); }

  void collect(ParamList<T>& out, const std::string& prefix) const {
    out.push_back({prefix + ".gamma", gamma});
    out.push_back({prefix + ".beta", beta});
  }
};

/// Collects per-head attention weight matrices when passed to a forward call.
template <class T>
struct AttentionTrace {
  std::vector<BasicTensor<T>> weights;
};

/// Scaled dot-product attention over already-projected q (n_q x d), k and v (n_k x d).
template <class T>
BasicTensor<T> multi_head_attention(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v,
                                    std::size_t n_heads, bool causal, AttentionTrace<T>* trace = nullptr) {
  const std::size_t d = q.cols();
  if (n_heads == 0 || d % n_heads != 0) {
    throw ContractError("attention width " + std::to_string(d) + " is not divisible by " +
                        std::to_string(n_heads) + " heads");
  }
  if (k.cols() != d || v.cols() != d || k.rows() != v.rows()) {
    throw ShapeError("attention: q " + shape_str(q.shape()) + ", k " + shape_str(k.shape()) + ", v " +
                     shape_str(v.shape()) + " do not agree");
  }
  const std::size_t dh = d / n_heads;
  const T factor = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  std::vector<BasicTensor<T>> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    auto qh = n_heads == 1 ? q : slice_cols(q, h * dh, dh);
    auto kh = n_heads == 1 ? k : slice_cols(k, h * dh, dh);
    auto vh = n_heads == 1 ? v : slice_cols(v, h * dh, dh);
    auto scores = scale(matmul(qh, transpose(kh)), factor);
    auto weights = causal ? causal_softmax_rows(scores) : softmax_rows(scores);
    if (trace) trace->weights.push_back(weights);
    heads.push_back(matmul(weights, vh));
  }
  return n_heads == 1 ? heads.front() : concat_cols(heads);
}

/// Sublayer switches for a cross-attention block. All on is the standard
/// post-norm encoder block; tests switch parts off to isolate the attention.
struct BlockOptions {
  bool residual = true;
  bool layer_norm = true;
  bool feed_forward = true;
};

/// One cross-attention block: queries attend over a memory sequence.
///
/// The key map carries no bias: a key bias adds the same q.b to every score in
/// a row, which softmax cancels, so it would never receive gradient.
template <class T>
struct CrossAttentionLayer {
  Linear<T> wq, wk, wv, wo;
  LayerNorm<T> ln_attn, ln_ffn;
  Linear<T> ff_in, ff_out;
  std::size_t n_heads = 1;
  BlockOptions options;

  static CrossAttentionLayer init(std::size_t d, std::size_t d_ff, std::size_t heads, Rng& rng) {
    CrossAttentionLayer l;
    l.wq = Linear<T>::init(d, d, rng);
    l.wk = Linear<T>::init_unbiased(d, d, rng);
    l.wv = Linear<T>::init(d, d, rng);
    l.wo = Linear<T>::init(d, d, rng);
    l.ln_attn = LayerNorm<T>::init(d);
    l.ff_in = Linear<T>::init(d, d_ff, rng);
    l.ff_out = Linear<T>::init(d_ff, d, rng);
    l.ln_ffn = LayerNorm<T>::init(d);
    l.n_heads = heads;
    return l;
  }

  BasicTensor<T> forward(const BasicTensor<T>& queries, const BasicTensor<T>& memory,
                         AttentionTrace<T>* trace = nullptr) const {
    auto attended = wo(multi_head_attention(wq(queries), wk(memory), wv(memory), n_heads, false, trace));
    auto x = options.residual ? add(queries, attended) : attended;
    if (options.layer_norm) x = ln_attn(x);
    if (!options.feed_forward) return x;
    auto f = ff_out(relu(ff_in(x)));
    auto y = options.residual ? add(x, f) : f;
    return options.layer_norm ? ln_ffn(y) : y;
  }

  void collect(ParamList<T>& out, const std::string& prefix) const {
    wq.collect(out, prefix + ".wq");
    wk.collect(out, prefix + ".wk");
    wv.collect(out, prefix + ".wv");
    wo.collect(out, prefix + ".wo");
    ln_attn.collect(out, prefix + ".ln_attn");
    ff_in.collect(out, prefix + ".ff_in");
    ff_out.collect(out, prefix + ".ff_out");
    ln_ffn.collect(out, prefix + ".ln_ffn");
  }
};

/// n_layers cross-attention blocks; every layer attends over the same memory.
template <class T>
struct AttentionStack {
  std::vector<CrossAttentionLayer<T>> layers;

  static AttentionStack init(std::size_t n_layers, std::size_t d, std::size_t d_ff, std::size_t heads, Rng& rng) {
    AttentionStack s;
    for (std::size_t i = 0; i < n_layers; ++i) s.layers.push_back(CrossAttentionLayer<T>::init(d, d_ff, heads, rng));
    return s;
  }

  BasicTensor<T> forward(const BasicTensor<T>& queries, const BasicTensor<T>& memory,
                         AttentionTrace<T>* trace = nullptr) const {
    auto x = queries;
    for (const auto& layer : layers) x = layer.forward(x, memory, trace);
    return x;
  }

  ParamList<T> parameters(const std::string& prefix) const {
    ParamList<T> out;
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(out, prefix + ".layer" + std::to_string(i));
    return out;
  }
};

}  // namespace cadpt
