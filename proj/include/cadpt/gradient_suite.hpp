// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference verification of every differentiable primitive and of the
// adapter, language-model and contrastive compositions built on them.
//
// Checks run in long double so the central difference itself is accurate
// far below the tolerance; the backward rules are the same templates that run
// in float during training.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cadpt/adapter.hpp"
#include "cadpt/contrastive.hpp"
#include "cadpt/gradcheck.hpp"
#include "cadpt/lm.hpp"
#include "cadpt/ops.hpp"
#include "cadpt/random.hpp"

namespace cadpt {

struct GradCheckResult {
  std::string name;
  std::uint64_t seed = 0;
  double max_rel_error = 0;
  double tolerance = 1e-3;
  bool passed() const { return max_rel_error < tolerance; }
};

namespace detail {

using D = long double;
using DT = BasicTensor<D>;

// Generic scalar probe: sum(out * w) for a fixed random w, so every output
// coordinate contributes with a distinct weight.
struct Probe {
  explicit Probe(Rng* r) : rng(r) {}
  Rng* rng;
  std::vector<DT> weights;
  std::size_t next = 0;
  DT operator()(const DT& out) {
    if (next == weights.size()) weights.push_back(random_matrix<D>(out.rows(), out.cols(), *rng));
    return sum(mul(out, weights[next++]));
  }
  void reset() { next = 0; }
};

inline double check_all(const std::function<DT()>& f, const std::vector<DT>& params, double step) {
  double worst = 0;
  for (const auto& p : params) worst = std::max(worst, finite_difference_check<D>(f, p, step));
  return worst;
}

inline DT leaf(std::size_t r, std::size_t c, Rng& rng, double lo = -1, double hi = 1) {
  auto t = random_matrix<D>(r, c, rng, lo, hi);
  t.set_requires_grad(true);
  return t;
}

// Values bounded away from zero so finite differences never straddle the ReLU kink.
inline DT leaf_away_from_zero(std::size_t r, std::size_t c, Rng& rng) {
  auto t = leaf(r, c, rng);
  for (auto& v : t.data()) v = v < 0 ? std::min<D>(v, -0.05) : std::max<D>(v, 0.05);
  return t;
}

inline std::vector<DT> tensors_of(const ParamList<D>& params) {
  std::vector<DT> out;
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

inline AdapterConfig tiny_adapter_config() {
  AdapterConfig c;
  c.d_v = 6;
  c.d_t = 8;
  c.n_q = 4;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_hidden_mlp = 8;
  c.d_ff = 8;
  return c;
}

inline std::vector<DT> adapter_tensors(const ChartAdapter<D>& a) {
  std::vector<DT> out;
  for (const auto& [name, params] : a.groups()) {
    auto t = tensors_of(params);
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

}  // namespace detail

using GradCheck = std::function<GradCheckResult(std::uint64_t seed)>;

/// Named checks in reporting order. Steps are 1e-5 unless noted.
inline std::vector<std::pair<std::string, GradCheck>> gradient_checks() {
  using namespace detail;
  constexpr double kStep = 1e-5;
  std::vector<std::pair<std::string, GradCheck>> checks;
  auto add_check = [&](std::string name, double tol, std::function<double(Rng&)> body) {
    checks.emplace_back(name, [name, tol, body](std::uint64_t seed) {
      Rng rng = derive_rng(seed, "gradcheck/" + name);
      return GradCheckResult{name, seed, body(rng), tol};
    });
  };

  add_check("matmul", 1e-3, [](Rng& rng) {
    auto a = leaf(3, 3, rng), b = leaf(3, 3, rng);
    return check_all([&] { return sum(matmul(a, b)); }, {a, b}, 1e-3);
  });
  add_check("add", 1e-3, [](Rng& rng) {
    auto a = leaf(2, 3, rng), b = leaf(2, 3, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(add(a, b)); }, {a, b}, kStep);
  });
  add_check("sub", 1e-3, [](Rng& rng) {
    auto a = leaf(2, 3, rng), b = leaf(2, 3, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(sub(a, b)); }, {a, b}, kStep);
  });
  add_check("mul", 1e-3, [](Rng& rng) {
    auto a = leaf(2, 3, rng), b = leaf(2, 3, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(mul(a, b)); }, {a, b}, kStep);
  });
  add_check("scale", 1e-3, [](Rng& rng) {
    auto a = leaf(2, 3, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(scale(a, D(1.7))); }, {a}, kStep);
  });
  add_check("add_bias", 1e-3, [](Rng& rng) {
    auto a = leaf(3, 4, rng), b = leaf(1, 4, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(add_bias(a, b)); }, {a, b}, kStep);
  });
  add_check("transpose", 1e-3, [](Rng& rng) {
    auto a = leaf(2, 3, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(transpose(a)); }, {a}, kStep);
  });
  add_check("concat_rows", 1e-3, [](Rng& rng) {
    auto a = leaf(2, 3, rng), b = leaf(1, 3, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(concat_rows<D>({a, b, a})); }, {a, b}, kStep);
  });
  add_check("concat_cols", 1e-3, [](Rng& rng) {
    auto a = leaf(2, 3, rng), b = leaf(2, 1, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(concat_cols<D>({a, b})); }, {a, b}, kStep);
  });
  add_check("slice", 1e-3, [](Rng& rng) {
    auto a = leaf(4, 5, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(slice_rows(slice_cols(a, 1, 3), 1, 2)); }, {a}, kStep);
  });
  add_check("embedding", 1e-3, [](Rng& rng) {
    auto table = leaf(5, 3, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(embedding(table, {4, 0, 4, 2})); }, {table}, kStep);
  });
  add_check("sum_mean", 1e-3, [](Rng& rng) {
    auto a = leaf(3, 4, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return add(mean(mul(a, a)), p(mean_rows(a))); }, {a}, kStep);
  });
  add_check("relu", 1e-3, [](Rng& rng) {
    auto a = leaf_away_from_zero(3, 4, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(relu(a)); }, {a}, 1e-3);
  });
  add_check("softmax_rows", 1e-3, [](Rng& rng) {
    auto a = leaf(2, 4, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(softmax_rows(a)); }, {a}, kStep);
  });
  add_check("causal_softmax_rows", 1e-3, [](Rng& rng) {
    auto a = leaf(4, 4, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(causal_softmax_rows(a)); }, {a}, kStep);
  });
  add_check("layer_norm", 1e-3, [](Rng& rng) {
    auto x = leaf(3, 5, rng), g = leaf(1, 5, rng), b = leaf(1, 5, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(layer_norm(x, g, b)); }, {x, g, b}, kStep);
  });
  add_check("l2_normalize_rows", 1e-3, [](Rng& rng) {
    auto x = leaf(3, 4, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(l2_normalize_rows(x)); }, {x}, kStep);
  });
  add_check("cross_entropy_logits", 1e-3, [](Rng& rng) {
    auto x = leaf(4, 5, rng, -2, 2);
    return check_all([&] { return cross_entropy_logits(x, {1, kIgnoreIndex, 4, 0}); }, {x}, kStep);
  });

  add_check("project", 1e-3, [](Rng& rng) {
    auto x = leaf(3, 6, rng), m = leaf(8, 6, rng);
    return check_all([&] { return sum(project(x, m)); }, {x, m}, kStep);
  });
  add_check("latent_transform", 1e-3, [](Rng& rng) {
    auto mu = leaf(4, 8, rng);
    LatentMlp<D> mlp{leaf(6, 8, rng), leaf(1, 6, rng), leaf(8, 6, rng), leaf(1, 8, rng)};
    return check_all([&] { return sum(latent_transform(mu, mlp)); }, {mu, mlp.w1, mlp.w2, mlp.b1, mlp.b2}, kStep);
  });
  add_check("cross_modal_interact", 1e-3, [](Rng& rng) {
    auto stack = AttentionStack<D>::init(2, 8, 8, 2, rng);
    auto g = leaf(3, 8, rng), sigma = leaf(4, 8, rng);
    Probe p{&rng};
    auto params = tensors_of(stack.parameters("s"));
    params.push_back(g);
    params.push_back(sigma);
    return check_all([&] { p.reset(); return p(cross_modal_interact(g, sigma, stack)); }, params, kStep);
  });
  add_check("semantic_decode", 1e-3, [](Rng& rng) {
    auto stack = AttentionStack<D>::init(2, 8, 8, 2, rng);
    auto mu = leaf(4, 8, rng), h = leaf(3, 8, rng);
    Probe p{&rng};
    auto params = tensors_of(stack.parameters("s"));
    params.push_back(mu);
    params.push_back(h);
    return check_all([&] { p.reset(); return p(semantic_decode(mu, h, stack)); }, params, kStep);
  });
  add_check("inverse_project", 1e-3, [](Rng& rng) {
    auto e = leaf(4, 8, rng), m = leaf(8, 6, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return p(inverse_project(e, m)); }, {e, m}, kStep);
  });
  add_check("shared_projector", 1e-3, [](Rng& rng) {
    auto x = leaf(3, 6, rng), e = leaf(4, 8, rng), m = leaf(8, 6, rng);
    Probe p{&rng};
    return check_all([&] { p.reset(); return add(p(project(x, m)), p(inverse_project(e, m))); }, {m}, kStep);
  });
  add_check("adapter_forward", 2e-3, [](Rng& rng) {
    ChartAdapter<D> adapter(tiny_adapter_config(), rng);
    // Unit-scale latent queries and projector; the 0.02 production init leaves
    // the latent MLP almost entirely in its bias-driven regime.
    for (auto* t : {&adapter.latent_queries(), &adapter.projector()}) {
      auto fresh = random_matrix<D>(t->rows(), t->cols(), rng);
      std::copy(fresh.data().begin(), fresh.data().end(), t->data().begin());
    }
    auto x = leaf(5, 6, rng);
    Probe p{&rng};
    auto params = adapter_tensors(adapter);
    params.push_back(x);
    return check_all([&] { p.reset(); return p(adapter.forward(x).r); }, params, kStep);
  });
  add_check("lm_loss_prefix", 1e-3, [](Rng& rng) {
    TinyLMConfig cfg;
    cfg.vocab_size = 12;
    cfg.d_l = 8;
    cfg.n_blocks = 1;
    cfg.n_heads = 2;
    cfg.d_ff = 8;
    cfg.max_seq = 16;
    TinyLM<D> lm(cfg, rng);
    auto comp = PrefixComposition<D>::init(8, 6, 4, rng);
    auto r = leaf(2, 6, rng), g = leaf(3, 4, rng);
    const std::vector<std::int64_t> prompt{5, 6}, target{7, 9, Tokenizer::kEos};
    auto params = tensors_of(comp.parameters());
    params.push_back(r);
    params.push_back(g);
    return check_all(
        [&] { return lm_loss(lm, compose_input(prompt, r, g, shifted_stream(target), comp, lm), target); }, params,
        kStep);
  });
  add_check("info_nce_loss", 1e-3, [](Rng& rng) {
    auto c = leaf(4, 5, rng), t = leaf(4, 5, rng);
    return check_all([&] { return info_nce_loss(c, t, 0.5); }, {c, t}, kStep);
  });
  return checks;
}

/// Runs every check for every seed.
inline std::vector<GradCheckResult> run_gradient_suite(const std::vector<std::uint64_t>& seeds) {
  std::vector<GradCheckResult> out;
  for (const auto& [name, check] : gradient_checks())
    for (auto s : seeds) out.push_back(check(s));
  return out;
}

}  // namespace cadpt
