// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// The chart adapter: a projector into the adapter's textual space, learnable
// latent queries refined by a two-layer MLP, a cross-modal interaction stack,
// an implicit semantic decoder stack, and a back-projection through the
// transposed projector.
//
//   g = x M^T              (n_patches x d_t)
//   s = ReLU(ReLU(mu w2^T + b2) w1^T + b1)
//   h = Attention(g, s, s) (n_patches x d_t)
//   e = Attention(mu, h, h) (n_q x d_t)
//   r = e M                (n_q x d_v)
//
// Rows are vectors, so "M x_i" for a patch x_i is row i of x M^T.
#pragma once

#include <string>

#include "cadpt/attention.hpp"
#include "cadpt/ops.hpp"
#include "cadpt/params.hpp"
#include "cadpt/random.hpp"

namespace cadpt {

struct AdapterConfig {
  std::size_t d_v = 48;           // chart feature width
  std::size_t d_t = 64;           // adapter internal width
  std::size_t n_q = 16;           // latent queries
  std::size_t n_layers = 2;       // blocks per attention stack
  std::size_t n_heads = 4;
  std::size_t d_hidden_mlp = 128; // latent MLP hidden width
  std::size_t d_ff = 128;         // feed-forward width inside attention blocks

  void validate() const {
    if (d_v == 0 || d_t == 0 || n_q == 0 || n_layers == 0 || n_heads == 0 || d_hidden_mlp == 0 || d_ff == 0) {
      throw ContractError("adapter config: every dimension must be at least 1");
    }
    if (d_t % n_heads != 0) {
      throw ContractError("adapter config: d_t=" + std::to_string(d_t) + " is not divisible by n_heads=" +
                          std::to_string(n_heads));
    }
  }
};

template <class T>
struct LatentMlp {
  BasicTensor<T> w2;  // d_hidden x d_t
  BasicTensor<T> b2;  // 1 x d_hidden
  BasicTensor<T> w1;  // d_t x d_hidden
  BasicTensor<T> b1;  // 1 x d_t
};

template <class T>
struct AdapterOutput {
  BasicTensor<T> g;  // projected chart features
  BasicTensor<T> h;  // interaction output
  BasicTensor<T> e;  // decoded semantics
  BasicTensor<T> r;  // back-projected semantics
};

/// Row-wise projection into the adapter space. projector is d_t x d_v.
template <class T>
BasicTensor<T> project(const BasicTensor<T>& x, const BasicTensor<T>& projector) {
  if (x.rank() != 2 || projector.rank() != 2 || x.cols() != projector.cols()) {
    throw ShapeError("project: features " + shape_str(x.shape()) + " do not match projector " +
                     shape_str(projector.shape()));
  }
  return matmul(x, transpose(projector));
}

/// Back to the visual space through the same projector storage, transposed.
template <class T>
BasicTensor<T> inverse_project(const BasicTensor<T>& e, const BasicTensor<T>& projector) {
  if (e.rank() != 2 || projector.rank() != 2 || e.cols() != projector.rows()) {
    throw ShapeError("inverse_project: input " + shape_str(e.shape()) + " does not match projector " +
                     shape_str(projector.shape()));
  }
  return matmul(e, projector);
}

/// w2 is applied first, then w1, each followed by ReLU.
template <class T>
BasicTensor<T> latent_transform(const BasicTensor<T>& mu, const LatentMlp<T>& mlp) {
  if (mu.cols() != mlp.w2.cols() || mlp.w1.cols() != mlp.w2.rows() || mlp.w1.rows() != mu.cols()) {
    throw ShapeError("latent_transform: queries " + shape_str(mu.shape()) + " vs w2 " + shape_str(mlp.w2.shape()) +
                     ", w1 " + shape_str(mlp.w1.shape()));
  }
  auto hidden = relu(add_bias(matmul(mu, transpose(mlp.w2)), mlp.b2));
  return relu(add_bias(matmul(hidden, transpose(mlp.w1)), mlp.b1));
}

template <class T>
BasicTensor<T> cross_modal_interact(const BasicTensor<T>& g, const BasicTensor<T>& sigma, const AttentionStack<T>& stack,
                                    AttentionTrace<T>* trace = nullptr) {
  if (g.cols() != sigma.cols()) {
    throw ShapeError("cross_modal_interact: g " + shape_str(g.shape()) + " and latent " + shape_str(sigma.shape()) +
                     " differ in width");
  }
  return stack.forward(g, sigma, trace);
}

template <class T>
BasicTensor<T> semantic_decode(const BasicTensor<T>& mu, const BasicTensor<T>& h, const AttentionStack<T>& stack,
                               AttentionTrace<T>* trace = nullptr) {
  if (mu.cols() != h.cols()) {
    throw ShapeError("semantic_decode: queries " + shape_str(mu.shape()) + " and memory " + shape_str(h.shape()) +
                     " differ in width");
  }
  return stack.forward(mu, h, trace);
}

template <class T>
class ChartAdapter {
 public:
  ChartAdapter() = default;

  ChartAdapter(const AdapterConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg.validate();
    projector_ = normal_scaled<T>(cfg.d_t, cfg.d_v, 0.02, rng);
    latent_queries_ = normal_scaled<T>(cfg.n_q, cfg.d_t, 0.02, rng);
    mlp_.w2 = uniform_fan_in<T>(cfg.d_hidden_mlp, cfg.d_t, cfg.d_t, rng);
    mlp_.b2 = BasicTensor<T>::zeros({1, cfg.d_hidden_mlp}, true);
    mlp_.w1 = uniform_fan_in<T>(cfg.d_t, cfg.d_hidden_mlp, cfg.d_hidden_mlp, rng);
    mlp_.b1 = BasicTensor<T>::zeros({1, cfg.d_t}, true);
    interaction_ = AttentionStack<T>::init(cfg.n_layers, cfg.d_t, cfg.d_ff, cfg.n_heads, rng);
    decoder_ = AttentionStack<T>::init(cfg.n_layers, cfg.d_t, cfg.d_ff, cfg.n_heads, rng);
  }

  const AdapterConfig& config() const { return cfg_; }

  BasicTensor<T>& projector() { return projector_; }
  const BasicTensor<T>& projector() const { return projector_; }
  BasicTensor<T>& latent_queries() { return latent_queries_; }
  const BasicTensor<T>& latent_queries() const { return latent_queries_; }
  LatentMlp<T>& mlp() { return mlp_; }
  const LatentMlp<T>& mlp() const { return mlp_; }
  AttentionStack<T>& interaction_stack() { return interaction_; }
  const AttentionStack<T>& interaction_stack() const { return interaction_; }
  AttentionStack<T>& decoder_stack() { return decoder_; }
  const AttentionStack<T>& decoder_stack() const { return decoder_; }

  /// Runs the full adapter. When traces are given, each stack's attention
  /// weights are appended to them.
  AdapterOutput<T> forward(const BasicTensor<T>& x, AttentionTrace<T>* interaction_trace = nullptr,
                           AttentionTrace<T>* decoder_trace = nullptr) const {
    AdapterOutput<T> out;
    out.g = project(x, projector_);
    auto sigma = latent_transform(latent_queries_, mlp_);
    out.h = cross_modal_interact(out.g, sigma, interaction_, interaction_trace);
    out.e = semantic_decode(latent_queries_, out.h, decoder_, decoder_trace);
    out.r = inverse_project(out.e, projector_);
    return out;
  }

  void add_groups(ParamGroups<T>& groups) const {
    groups[std::string(group::kProjector)] = {{"projector.M", projector_}};
    groups[std::string(group::kLatentQueries)] = {{"latent_queries.mu", latent_queries_}};
    groups[std::string(group::kLatentMlp)] = {{"latent_mlp.w2", mlp_.w2},
                                              {"latent_mlp.b2", mlp_.b2},
                                              {"latent_mlp.w1", mlp_.w1},
                                              {"latent_mlp.b1", mlp_.b1}};
    groups[std::string(group::kInteractionStack)] = interaction_.parameters("interaction_stack");
    groups[std::string(group::kDecoderStack)] = decoder_.parameters("decoder_stack");
  }

  ParamGroups<T> groups() const {
    ParamGroups<T> g;
    add_groups(g);
    return g;
  }

 private:
  AdapterConfig cfg_;
  BasicTensor<T> projector_;       // d_t x d_v, shared by project and inverse_project
  BasicTensor<T> latent_queries_;  // n_q x d_t
  LatentMlp<T> mlp_;
  AttentionStack<T> interaction_;
  AttentionStack<T> decoder_;
};

}  // namespace cadpt
