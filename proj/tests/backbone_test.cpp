// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>

#include "cadpt/dataset.hpp"
#include "cadpt/encoder.hpp"
#include "cadpt/gradient_suite.hpp"
#include "cadpt/lm.hpp"
#include "cadpt/model.hpp"

using namespace cadpt;

namespace {

TinyLMConfig tiny_lm(std::size_t vocab = 20) {
  TinyLMConfig c;
  c.vocab_size = vocab;
  c.d_l = 16;
  c.n_blocks = 2;
  c.n_heads = 2;
  c.d_ff = 32;
  c.max_seq = 32;
  return c;
}

ChartSpec bar(std::vector<double> values) {
  ChartSpec s;
  s.chart_type = ChartType::kBar;
  s.title = "monthly revenue";
  s.categories = {"alpha", "beta", "gamma"};
  s.series = {std::move(values)};
  return s;
}

bool same(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST_CASE("tokenizer specials and round trip", "[backbone]") {
  auto tok = closed_tokenizer();
  CHECK(tok.token(Tokenizer::kPad) == "<pad>");
  CHECK(tok.token(Tokenizer::kBos) == "<bos>");
  CHECK(tok.token(Tokenizer::kEos) == "<eos>");
  CHECK(tok.token(Tokenizer::kChart) == "<chart>");
  CHECK(tok.token(Tokenizer::kUnk) == "<unk>");
  for (std::size_t i = 5; i < tok.size(); ++i) CHECK(tok.id(tok.token(static_cast<std::int64_t>(i))) == static_cast<std::int64_t>(i));
  const std::string text = "this bar chart shows monthly revenue. alpha has the highest value at 9 and beta has the lowest value at 2.";
  CHECK(tok.decode(tok.encode(text)) == text);
  CHECK(tok.encode("zebra")[0] == Tokenizer::kUnk);
  CHECK_THROWS(Tokenizer::from_vocabulary({"a", "b"}));
}

TEST_CASE("chart encoding is deterministic and value-local", "[backbone]") {
  ChartEncoderConfig cfg;
  auto a = encode_chart(bar({1, 2, 3}), cfg);
  CHECK(same(a, encode_chart(bar({1, 2, 3}), cfg)));
  CHECK(a.shape() == Shape{3, cfg.d_v});
  auto b = encode_chart(bar({3, 2, 1}), cfg);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < cfg.d_v; ++j) {
      if (j == 0) continue;
      CHECK(a.at(i, j) == b.at(i, j));
    }
  CHECK(a.at(0, 0) != b.at(0, 0));
  auto bad = bar({1, 2, 3});
  bad.series = {};
  CHECK_THROWS_AS(encode_chart(bad, cfg), ValidationError);
}

TEST_CASE("composed length and segment order", "[backbone]") {
  Rng rng(1);
  TinyLM<float> lm(tiny_lm(), rng);
  auto comp = PrefixComposition<float>::init(16, 6, 8, rng);
  auto r = random_matrix<float>(4, 6, rng), g = random_matrix<float>(5, 8, rng);
  const std::vector<std::int64_t> prompt{5, 6, 7}, stream{1, 8, 9, 10, 11, 12, 13};
  auto seq = compose_input(prompt, r, g, stream, comp, lm);
  CHECK(seq.shape() == Shape{19, 16});

  // Swapping two r rows changes exactly those two positions.
  std::vector<float> swapped(r.data().begin(), r.data().end());
  std::swap_ranges(swapped.begin(), swapped.begin() + 6, swapped.begin() + 12);
  auto seq2 = compose_input(prompt, Tensor::matrix(4, 6, swapped), g, stream, comp, lm);
  for (std::size_t i = 0; i < 19; ++i) {
    bool row_same = true;
    for (std::size_t j = 0; j < 16; ++j) row_same = row_same && seq.at(i, j) == seq2.at(i, j);
    const bool expect_change = i == 3 || i == 5;
    CHECK(row_same != expect_change);
  }
}

TEST_CASE("degenerate composition is just the stream", "[backbone]") {
  Rng rng(2);
  TinyLM<float> lm(tiny_lm(), rng);
  auto comp = PrefixComposition<float>::init(16, 6, 8, rng);
  const std::vector<std::int64_t> stream{1, 8, 9};
  auto seq = compose_input({}, Tensor{}, Tensor{}, stream, comp, lm);
  CHECK(same(seq, lm.add_positions(lm.embed_tokens(stream))));
}

TEST_CASE("sequences beyond capacity raise a length error", "[backbone]") {
  Rng rng(3);
  TinyLM<float> lm(tiny_lm(), rng);
  auto comp = PrefixComposition<float>::init(16, 6, 8, rng);
  auto r = random_matrix<float>(20, 6, rng), g = random_matrix<float>(10, 8, rng);
  CHECK_THROWS_AS(compose_input({5, 6, 7}, r, g, {1}, comp, lm), LengthError);
}

TEST_CASE("lm loss reference values", "[backbone]") {
  Rng rng(4);
  TinyLM<float> lm(tiny_lm(20), rng);
  CHECK_THROWS_AS(lm_loss(lm, lm.add_positions(lm.embed_tokens({1, 2})), {}), ContractError);
  CHECK_THROWS_AS(lm_loss(lm, lm.add_positions(lm.embed_tokens({1, 2})), {5, 6}), ContractError);

  // Cross entropy on uniform and on one-hot logits, the two reference cases.
  auto uniform = Tensor::zeros({3, 20});
  CHECK(cross_entropy_logits(uniform, masked_labels(1, {7, 2})).item() == Catch::Approx(std::log(20.0)));
  std::vector<float> hot(3 * 20, 0.0f);
  hot[1 * 20 + 7] = 50.0f;
  hot[2 * 20 + 2] = 50.0f;
  CHECK(cross_entropy_logits(Tensor::matrix(3, 20, hot), masked_labels(1, {7, 2})).item() < 1e-6);

  // A freshly initialized LM is close to uniform.
  auto seq = lm.add_positions(lm.embed_tokens({1, 5, 6, 7}));
  CHECK(std::abs(lm_loss(lm, seq, {5, 6, 7, Tokenizer::kEos}).item() - std::log(20.0)) < 0.5);
}

TEST_CASE("logits are causal", "[backbone]") {
  Rng rng(5);
  TinyLM<float> lm(tiny_lm(), rng);
  auto base = random_matrix<float>(8, 16, rng);
  auto l1 = lm.logits(lm.add_positions(base));
  CHECK(l1.shape() == Shape{8, 20});
  for (std::size_t t = 0; t < 8; ++t) {
    std::vector<float> v(base.data().begin(), base.data().end());
    for (std::size_t j = 0; j < 16; ++j) v[t * 16 + j] += 0.75f;
    auto l2 = lm.logits(lm.add_positions(Tensor::matrix(8, 16, v)));
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < 20; ++j) CHECK(l1.at(i, j) == l2.at(i, j));
    bool changed = false;
    for (std::size_t j = 0; j < 20; ++j) changed = changed || l1.at(t, j) != l2.at(t, j);
    CHECK(changed);
  }
}

TEST_CASE("prefix labels are masked", "[backbone]") {
  auto labels = masked_labels(3, {4, 5, Tokenizer::kEos});
  CHECK(labels == std::vector<std::int64_t>{kIgnoreIndex, kIgnoreIndex, kIgnoreIndex, 4, 5, Tokenizer::kEos});
  Rng rng(6);
  auto logits = random_matrix<float>(6, 20, rng);
  auto a = cross_entropy_logits(logits, labels).item();
  auto other = labels;
  other[0] = other[1] = other[2] = kIgnoreIndex;
  CHECK(cross_entropy_logits(logits, other).item() == a);
  // Teacher forcing feeds <bos> then all but the last target token.
  CHECK(shifted_stream({4, 5, Tokenizer::kEos}) == std::vector<std::int64_t>{Tokenizer::kBos, 4, 5});
}

TEST_CASE("greedy decoding bounds and determinism", "[backbone]") {
  Rng rng(7);
  TinyLM<float> lm(tiny_lm(), rng);
  auto prefix = random_matrix<float>(4, 16, rng);
  CHECK(generate_greedy(lm, prefix, 1).size() <= 1);
  CHECK(generate_greedy(lm, prefix, 10) == generate_greedy(lm, prefix, 10));
  CHECK_THROWS_AS(generate_greedy(lm, prefix, 0), ContractError);
}

TEST_CASE("one backward from the lm loss reaches every stage-3 group", "[backbone]") {
  ModelConfig cfg;
  cfg.adapter.d_v = 16;
  cfg.adapter.d_t = 16;
  cfg.adapter.n_q = 4;
  cfg.adapter.n_heads = 2;
  cfg.adapter.d_hidden_mlp = 16;
  cfg.adapter.d_ff = 16;
  cfg.encoder.d_v = 16;
  cfg.lm.d_l = 16;
  cfg.lm.n_heads = 2;
  cfg.lm.d_ff = 32;
  auto samples = generate_synthetic(4, 3);
  ChartSummarizer<float> model(cfg, closed_tokenizer(), 5);
  backward(model.sample_loss(model.prepare(samples[0])));
  for (const auto& [gname, params] : model.groups()) {
    if (gname == "text_contrast_head") continue;
    bool any = false;
    for (const auto& p : params)
      any = any || std::any_of(p.tensor.grad().begin(), p.tensor.grad().end(), [](float g) { return g != 0.0f; });
    INFO(gname);
    CHECK(any);
  }
}

TEST_CASE("lm loss gradient with respect to the prefix projections", "[backbone]") {
  for (const auto& [n, check] : gradient_checks()) {
    if (n != "lm_loss_prefix") continue;
    for (std::uint64_t s = 1; s <= 5; ++s) CHECK(check(s).passed());
  }
}
