// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Corpus BLEU-4 and ROUGE-1/2/L over word tokens.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cadpt/tensor.hpp"
#include "cadpt/text.hpp"

namespace cadpt {

using Tokens = std::vector<std::string>;

/// Metric tokenization: lowercase, punctuation detached, whitespace split.
inline Tokens metric_tokens(const std::string& text) { return normalize_words(text); }

namespace detail {
inline std::map<Tokens, std::size_t> ngram_counts(const Tokens& t, std::size_t n) {
  std::map<Tokens, std::size_t> out;
  if (t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[Tokens(t.begin() + i, t.begin() + i + n)];
  return out;
}

inline std::size_t clipped_overlap(const std::map<Tokens, std::size_t>& cand, const std::map<Tokens, std::size_t>& ref) {
  std::size_t hits = 0;
  for (const auto& [g, c] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) hits += std::min(c, it->second);
  }
  return hits;
}
}  // namespace detail

inline constexpr double kBleuEpsilon = 1e-9;

/// Corpus BLEU-4: clipped n-gram precisions pooled over the corpus, geometric
/// mean over n = 1..4, brevity penalty exp(1 - ref/cand) when cand < ref.
/// A zero match count for some n is replaced by kBleuEpsilon.
inline double bleu4(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references) {
  if (candidates.empty()) throw ContractError("bleu4: empty candidate list");
  if (candidates.size() != references.size()) throw ContractError("bleu4: candidate/reference count mismatch");
  std::size_t cand_len = 0, ref_len = 0;
  double matches[4] = {0, 0, 0, 0}, totals[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].size();
    ref_len += references[i].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      auto c = detail::ngram_counts(candidates[i], n);
      matches[n - 1] += static_cast<double>(detail::clipped_overlap(c, detail::ngram_counts(references[i], n)));
      totals[n - 1] += candidates[i].size() >= n ? static_cast<double>(candidates[i].size() - n + 1) : 0.0;
    }
  }
  if (cand_len == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    const double num = matches[n] > 0 ? matches[n] : kBleuEpsilon;
    const double den = totals[n] > 0 ? totals[n] : 1.0;
    log_sum += std::log(num / den);
  }
  const double bp = cand_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len)) : 1.0;
  return std::clamp(bp * std::exp(log_sum / 4.0), 0.0, 1.0);
}

struct RougeScore {
  double recall = 0;
  double precision = 0;
  double f1 = 0;
};

inline double harmonic_f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

inline RougeScore rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n) {
  if (n == 0) throw ContractError("rouge_n: n must be at least 1");
  auto c = detail::ngram_counts(candidate, n);
  auto r = detail::ngram_counts(reference, n);
  const double overlap = static_cast<double>(detail::clipped_overlap(c, r));
  const double rc = reference.size() >= n ? static_cast<double>(reference.size() - n + 1) : 0.0;
  const double cc = candidate.size() >= n ? static_cast<double>(candidate.size() - n + 1) : 0.0;
  RougeScore s;
  s.recall = rc > 0 ? overlap / rc : 0.0;
  s.precision = cc > 0 ? overlap / cc : 0.0;
  s.f1 = harmonic_f1(s.precision, s.recall);
  return s;
}

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline RougeScore rouge_l(const Tokens& candidate, const Tokens& reference) {
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  RougeScore s;
  s.recall = reference.empty() ? 0.0 : lcs / static_cast<double>(reference.size());
  s.precision = candidate.empty() ? 0.0 : lcs / static_cast<double>(candidate.size());
  s.f1 = harmonic_f1(s.precision, s.recall);
  return s;
}

struct RetrievalMetrics {
  double auc = 0;
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double threshold = 0.5;
};

inline nlohmann::json to_json(const RetrievalMetrics& m) {
  return {{"auc", m.auc}, {"accuracy", m.accuracy}, {"precision", m.precision},
          {"recall", m.recall}, {"f1", m.f1}, {"threshold", m.threshold}};
}

inline RetrievalMetrics retrieval_metrics_from_json(const nlohmann::json& j) {
  RetrievalMetrics m;
  m.auc = j.at("auc");
  m.accuracy = j.at("accuracy");
  m.precision = j.at("precision");
  m.recall = j.at("recall");
  m.f1 = j.at("f1");
  m.threshold = j.value("threshold", 0.5);
  return m;
}

struct SampleRecord {
  std::string id;
  std::string hypothesis;
  std::string reference;
  double rouge_l_f1 = 0;
};

/// Scores are in [0, 1]; ROUGE values are macro-averaged F1.
struct EvalReport {
  double bleu4 = 0;
  double rouge1 = 0;
  double rouge2 = 0;
  double rougeL = 0;
  std::size_t n_samples = 0;
  std::vector<SampleRecord> samples;
  std::optional<RetrievalMetrics> contrastive;

  bool operator==(const EvalReport& o) const {
    return to_json() == o.to_json();
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"rouge_variant", "f1"}, {"bleu4", bleu4},       {"rouge1", rouge1}, {"rouge2", rouge2},
                        {"rougeL", rougeL},      {"n_samples", n_samples}};
    if (!samples.empty()) {
      auto& arr = j["samples"] = nlohmann::json::array();
      for (const auto& s : samples)
        arr.push_back({{"id", s.id}, {"hypothesis", s.hypothesis}, {"reference", s.reference}, {"rougeL", s.rouge_l_f1}});
    }
    if (contrastive) j["contrastive"] = cadpt::to_json(*contrastive);
    return j;
  }

  static EvalReport from_json(const nlohmann::json& j) {
    EvalReport r;
    r.bleu4 = j.at("bleu4");
    r.rouge1 = j.at("rouge1");
    r.rouge2 = j.at("rouge2");
    r.rougeL = j.at("rougeL");
    r.n_samples = j.at("n_samples");
    if (j.contains("samples")) {
      for (const auto& s : j.at("samples"))
        r.samples.push_back({s.at("id"), s.at("hypothesis"), s.at("reference"), s.at("rougeL")});
    }
    if (j.contains("contrastive")) r.contrastive = retrieval_metrics_from_json(j.at("contrastive"));
    return r;
  }
};

/// Aggregates decoded hypotheses against references.
inline EvalReport score_corpus(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                               const std::vector<std::string>& ids = {}) {
  if (hypotheses.empty()) throw ContractError("score_corpus: no samples");
  if (hypotheses.size() != references.size()) throw ContractError("score_corpus: hypothesis/reference count mismatch");
  std::vector<Tokens> cands, refs;
  EvalReport rep;
  rep.n_samples = hypotheses.size();
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    cands.push_back(metric_tokens(hypotheses[i]));
    refs.push_back(metric_tokens(references[i]));
    rep.rouge1 += rouge_n(cands.back(), refs.back(), 1).f1;
    rep.rouge2 += rouge_n(cands.back(), refs.back(), 2).f1;
    const double rl = rouge_l(cands.back(), refs.back()).f1;
    rep.rougeL += rl;
    rep.samples.push_back({i < ids.size() ? ids[i] : std::to_string(i), hypotheses[i], references[i], rl});
  }
  const double n = static_cast<double>(hypotheses.size());
  rep.rouge1 /= n;
  rep.rouge2 /= n;
  rep.rougeL /= n;
  rep.bleu4 = bleu4(cands, refs);
  return rep;
}

/// One table row: name followed by BLEU-4 and ROUGE-1/2/L scaled to percent.
inline std::string format_table_row(const std::string& name, const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s | %7.2f | %7.2f | %7.2f | %7.2f", name.c_str(), 100 * r.bleu4, 100 * r.rouge1,
                100 * r.rouge2, 100 * r.rougeL);
  return buf;
}

inline std::string table_header() {
  return "Model        |  BLEU-4 | ROUGE-1 | ROUGE-2 | ROUGE-L\n"
         "-------------+---------+---------+---------+--------";
}

}  // namespace cadpt
