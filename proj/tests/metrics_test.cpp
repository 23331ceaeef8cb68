// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include "cadpt/metrics.hpp"
#include "cadpt/random.hpp"
#include "oracles.hpp"

using namespace cadpt;
using Catch::Approx;

namespace {

Tokens random_words(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> pool = {"the", "cat", "sat", "on", "mat"};
  std::uniform_int_distribution<std::size_t> len(0, max_len), word(0, pool.size() - 1);
  Tokens t(len(rng));
  for (auto& w : t) w = pool[word(rng)];
  return t;
}

}  // namespace

TEST_CASE("metrics equal the brute-force oracle on random pairs", "[metrics]") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = random_words(rng, 12), r = random_words(rng, 12);
    if (r.empty()) r.push_back("cat");
    INFO("trial " << trial);
    CHECK(bleu4({c}, {r}) == oracle::bleu4({c}, {r}));
    for (std::size_t n : {1u, 2u}) {
      auto got = rouge_n(c, r, n);
      auto want = oracle::rouge_n(c, r, n);
      CHECK(got.recall == want.recall);
      CHECK(got.precision == want.precision);
      CHECK(got.f1 == want.f1);
    }
    auto got = rouge_l(c, r);
    auto want = oracle::rouge_l(c, r);
    CHECK(lcs_length(c, r) == oracle::lcs(c, r));
    CHECK(got.recall == want.recall);
    CHECK(got.precision == want.precision);
    CHECK(got.f1 == want.f1);
  }
}

TEST_CASE("corpus bleu pools counts across pairs", "[metrics]") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tokens> cands, refs;
    for (int i = 0; i < 4; ++i) {
      cands.push_back(random_words(rng, 10));
      refs.push_back(random_words(rng, 10));
    }
    CHECK(bleu4(cands, refs) == oracle::bleu4(cands, refs));
  }
}

TEST_CASE("bleu worked example", "[metrics]") {
  const auto c = metric_tokens("the cat the cat on the mat");
  const auto r = metric_tokens("the cat sat on the mat");
  // Hand enumeration: "the" x3 clips to 2, "cat" x2 clips to 1, plus "on" and "mat".
  CHECK(oracle::clipped_matches(c, r, 1) == 5);
  CHECK(oracle::clipped_matches(c, r, 2) == 3);
  CHECK(oracle::clipped_matches(c, r, 3) == 1);
  CHECK(oracle::clipped_matches(c, r, 4) == 0);
  // (5/7 * 3/6 * 1/5 * 1e-9/4)^(1/4), brevity penalty 1.
  CHECK(bleu4({c}, {r}) == Approx(2.0556680845e-3).epsilon(1e-9));
  CHECK(bleu4({c}, {r}) == Approx(oracle::bleu4({c}, {r})).margin(1e-4));
}

TEST_CASE("rouge-1 worked example", "[metrics]") {
  auto s = rouge_n(metric_tokens("a b c"), metric_tokens("a c d"), 1);
  CHECK(s.recall == Approx(2.0 / 3).margin(1e-4));
  CHECK(s.precision == Approx(2.0 / 3).margin(1e-4));
  CHECK(s.f1 == Approx(2.0 / 3).margin(1e-4));
}

TEST_CASE("rouge-l worked example", "[metrics]") {
  auto s = rouge_l(metric_tokens("a b c d"), metric_tokens("a c b d"));
  CHECK(lcs_length(metric_tokens("a b c d"), metric_tokens("a c b d")) == 3);
  CHECK(s.recall == Approx(0.75).margin(1e-4));
  CHECK(s.precision == Approx(0.75).margin(1e-4));
  CHECK(s.f1 == Approx(0.75).margin(1e-4));
}

TEST_CASE("identical text scores one", "[metrics]") {
  auto t = metric_tokens("this pie chart divides total sales into 3 parts.");
  CHECK(bleu4({t}, {t}) == Approx(1.0));
  CHECK(rouge_n(t, t, 1).f1 == 1.0);
  CHECK(rouge_n(t, t, 2).f1 == 1.0);
  CHECK(rouge_l(t, t).f1 == 1.0);
}

TEST_CASE("short candidates pay the brevity penalty", "[metrics]") {
  auto r = metric_tokens("a b c d e f g h");
  auto c = metric_tokens("a b c d");
  CHECK(bleu4({c}, {r}) == Approx(std::exp(1.0 - 8.0 / 4.0)));
}

TEST_CASE("empty candidates score zero", "[metrics]") {
  auto r = metric_tokens("a b c");
  CHECK(bleu4({Tokens{}}, {r}) == 0.0);
  CHECK(rouge_n({}, r, 1).f1 == 0.0);
  CHECK(rouge_l({}, r).f1 == 0.0);
  CHECK_THROWS_AS(bleu4({}, {}), ContractError);
  CHECK_THROWS_AS(rouge_n(r, r, 0), ContractError);
}

TEST_CASE("rouge-l recall and precision swap with the arguments", "[metrics]") {
  auto a = metric_tokens("a b c d e"), b = metric_tokens("a c e");
  CHECK(rouge_l(a, b).recall == rouge_l(b, a).precision);
  CHECK(rouge_l(a, b).precision == rouge_l(b, a).recall);
}

TEST_CASE("metric tokenization detaches punctuation", "[metrics]") {
  CHECK(metric_tokens("The cat, sat.") == Tokens{"the", "cat", ",", "sat", "."});
}

TEST_CASE("corpus scores stay in the unit interval", "[metrics]") {
  Rng rng(5);
  std::vector<std::string> hyps, refs;
  auto join = [](const Tokens& t) {
    std::string s;
    for (const auto& w : t) s += w + " ";
    return s;
  };
  for (int i = 0; i < 30; ++i) {
    hyps.push_back(join(random_words(rng, 9)));
    refs.push_back(join(random_words(rng, 9)) + "cat");
  }
  auto rep = score_corpus(hyps, refs);
  CHECK(rep.n_samples == 30);
  for (double v : {rep.bleu4, rep.rouge1, rep.rouge2, rep.rougeL}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(EvalReport::from_json(rep.to_json()) == rep);
  CHECK_THROWS_AS(score_corpus({"a"}, {}), ContractError);
}
