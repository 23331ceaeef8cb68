// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>

#include "cadpt/contrastive.hpp"
#include "cadpt/dataset.hpp"
#include "cadpt/gradient_suite.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cadpt;
using Catch::Approx;

namespace {

std::vector<std::vector<double>> as_rows(const BasicTensor<double>& t) {
  std::vector<std::vector<double>> out(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) out[i].push_back(t.at(i, j));
  return out;
}

}  // namespace

TEST_CASE("identical embeddings give ln B", "[contrastive]") {
  for (std::size_t b : {2u, 5u, 32u}) {
    auto c = BasicTensor<double>::full({b, 4}, 0.3);
    CHECK(info_nce_loss(c, c, 0.07).item() == Approx(std::log(static_cast<double>(b))).epsilon(1e-12));
  }
}

TEST_CASE("two-sample batch matches the scalar oracle", "[contrastive]") {
  // chart rows (1,0) and (1,1); text rows (2,1) and (0,1); tau = 0.5.
  auto c = BasicTensor<double>::matrix(2, 2, {1, 0, 1, 1});
  auto t = BasicTensor<double>::matrix(2, 2, {2, 1, 0, 1});
  // Cosines: s11 = 2/sqrt5, s12 = 0, s21 = 3/sqrt10, s22 = 1/sqrt2; logits = cos / 0.5.
  const double s11 = 2 / std::sqrt(5.0) / 0.5, s12 = 0.0, s21 = 3 / std::sqrt(10.0) / 0.5, s22 = 1 / std::sqrt(2.0) / 0.5;
  const double rows = (std::log(std::exp(s11) + std::exp(s12)) - s11) + (std::log(std::exp(s21) + std::exp(s22)) - s22);
  const double cols = (std::log(std::exp(s11) + std::exp(s21)) - s11) + (std::log(std::exp(s12) + std::exp(s22)) - s22);
  const double hand = 0.25 * (rows + cols);
  CHECK(info_nce_loss(c, t, 0.5).item() == Approx(hand).epsilon(1e-12));
  CHECK(oracle::info_nce(as_rows(c), as_rows(t), 0.5) == Approx(hand).epsilon(1e-12));
}

TEST_CASE("random batches match the scalar oracle", "[contrastive]") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto c = random_matrix<double>(6, 5, rng), t = random_matrix<double>(6, 5, rng);
    CHECK(info_nce_loss(c, t, 0.07).item() == Approx(oracle::info_nce(as_rows(c), as_rows(t), 0.07)).epsilon(1e-10));
  }
}

TEST_CASE("orthogonal matched pairs at low temperature approach zero", "[contrastive]") {
  auto eye = BasicTensor<double>::identity(4);
  CHECK(info_nce_loss(eye, eye, 0.01).item() < 1e-30);
}

TEST_CASE("loss is non-negative and scale invariant", "[contrastive]") {
  Rng rng(4);
  auto c = random_matrix<double>(5, 6, rng), t = random_matrix<double>(5, 6, rng);
  const double base = info_nce_loss(c, t, 0.07).item();
  CHECK(base >= 0);
  CHECK(info_nce_loss(scale(c, 7.5), scale(t, 7.5), 0.07).item() == Approx(base).epsilon(1e-12));
}

TEST_CASE("degenerate inputs are rejected", "[contrastive]") {
  CHECK_THROWS_AS(info_nce_loss(Tensor::full({1, 3}, 1.0f), Tensor::full({1, 3}, 1.0f), 0.07), ContractError);
  CHECK_THROWS_AS(info_nce_loss(Tensor::full({2, 3}, 1.0f), Tensor::full({2, 3}, 1.0f), 0.0), ContractError);
  CHECK_THROWS_AS(info_nce_loss(Tensor::zeros({2, 3}), Tensor::full({2, 3}, 1.0f), 0.07), NumericError);
}

TEST_CASE("info nce gradient matches finite differences", "[contrastive]") {
  for (const auto& [n, check] : gradient_checks()) {
    if (n != "info_nce_loss") continue;
    for (std::uint64_t s = 1; s <= 5; ++s) CHECK(check(s).passed());
  }
}

TEST_CASE("retrieval metrics on separated and tied scores", "[contrastive]") {
  auto separated = Tensor::matrix(3, 3, {0.9f, 0.1f, 0.2f, 0.0f, 0.8f, 0.3f, 0.1f, 0.2f, 0.7f});
  auto m = retrieval_binary_metrics(separated, 0.5);
  CHECK(m.auc == 1.0);
  CHECK(m.accuracy == 1.0);
  CHECK(m.f1 == 1.0);
  auto tied = Tensor::full({4, 4}, 0.3f);
  CHECK(retrieval_binary_metrics(tied, 0.5).auc == 0.5);
  CHECK_THROWS_AS(retrieval_binary_metrics(Tensor::zeros({2, 3}), 0.5), ContractError);
}

TEST_CASE("three-sample score matrix matches pair enumeration", "[contrastive]") {
  // Diagonal 0.9, 0.4, 0.6; one negative (0.6) ties a positive and one (0.7) beats two.
  const std::vector<float> s = {0.9f, 0.6f, 0.1f, 0.7f, 0.4f, 0.2f, 0.3f, 0.5f, 0.6f};
  auto m = retrieval_binary_metrics(Tensor::matrix(3, 3, s), 0.5);
  std::vector<double> pos = {s[0], s[4], s[8]}, neg = {s[1], s[2], s[3], s[5], s[6], s[7]};
  CHECK(m.auc == Approx(oracle::auc(pos, neg)).epsilon(1e-15));
  // Threshold 0.5: predicted positive iff score >= 0.5.
  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (double p : pos) (p >= 0.5 ? tp : fn) += 1;
  for (double n : neg) (n >= 0.5 ? fp : tn) += 1;
  CHECK(m.accuracy == Approx((tp + tn) / 9));
  CHECK(m.precision == Approx(tp / (tp + fp)));
  CHECK(m.recall == Approx(tp / (tp + fn)));
  CHECK(m.f1 == Approx(2 * tp / (2 * tp + fp + fn)));
}

TEST_CASE("random score matrices match pair enumeration", "[contrastive]") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_matrix<float>(5, 5, rng, 0, 1);
    // Quantize so ties occur.
    for (auto& v : s.data()) v = std::round(v * 4) / 4;
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) (i == j ? pos : neg).push_back(s.at(i, j));
    CHECK(retrieval_binary_metrics(s, 0.5).auc == Approx(oracle::auc(pos, neg)).epsilon(1e-15));
  }
}

TEST_CASE("stage 1 trains only its groups", "[contrastive]") {
  auto samples = generate_synthetic(24, 8);
  ChartSummarizer<float> model(fixtures::small_model(), closed_tokenizer(), 3);
  StagePlan plan{1, stage_groups(1), {2, 0, 3e-3, 8}};
  const auto before = fingerprints(model.groups());
  Rng rng(1);
  auto rep = run_stage1(model, samples, plan, 0.07, 0.5, rng);
  const auto after = fingerprints(model.groups());
  CHECK(rep.losses.size() == 6);
  REQUIRE(rep.retrieval.has_value());
  for (const auto& [name, fp] : before) {
    INFO(name);
    const bool trained = name == "projector" || name == "text_contrast_head";
    CHECK((after.at(name) != fp) == trained);
  }
}

TEST_CASE("stage 1 argument contracts", "[contrastive]") {
  ChartSummarizer<float> model(fixtures::small_model(), closed_tokenizer(), 3);
  Rng rng(1);
  StagePlan plan{1, stage_groups(1), {1, 0, 3e-4, 8}};
  CHECK_THROWS_AS(run_stage1(model, {}, plan, 0.07, 0.5, rng), ContractError);
  StagePlan wrong{2, stage_groups(2), {1, 0, 3e-4, 8}};
  CHECK_THROWS_AS(run_stage1(model, generate_synthetic(8, 1), wrong, 0.07, 0.5, rng), ContractError);
  StagePlan extra{1, {"projector", "lm"}, {1, 0, 3e-4, 8}};
  CHECK_THROWS_AS(run_stage1(model, generate_synthetic(8, 1), extra, 0.07, 0.5, rng), ContractError);
}
