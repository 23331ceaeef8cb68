// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deliberately naive reference implementations used as test oracles. None of
// them shares code with the library: n-grams are compared as flat lists, LCS is
// found by enumerating subsequences, AUC by enumerating every pair.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

using Words = std::vector<std::string>;

inline std::vector<Words> ngrams(const Words& w, std::size_t n) {
  std::vector<Words> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) out.emplace_back(w.begin() + static_cast<long>(i), w.begin() + static_cast<long>(i + n));
  return out;
}

inline std::size_t count_of(const std::vector<Words>& list, const Words& g) {
  std::size_t c = 0;
  for (const auto& x : list) c += x == g ? 1 : 0;
  return c;
}

// Clipped matches: each distinct candidate n-gram counts min(cand, ref) times.
inline std::size_t clipped_matches(const Words& cand, const Words& ref, std::size_t n) {
  auto c = ngrams(cand, n), r = ngrams(ref, n);
  std::vector<Words> seen;
  std::size_t total = 0;
  for (const auto& g : c) {
    if (count_of(seen, g)) continue;
    seen.push_back(g);
    total += std::min(count_of(c, g), count_of(r, g));
  }
  return total;
}

inline double bleu4(const std::vector<Words>& cands, const std::vector<Words>& refs) {
  double log_sum = 0;
  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    cand_len += cands[i].size();
    ref_len += refs[i].size();
  }
  for (std::size_t n = 1; n <= 4; ++n) {
    double matches = 0, total = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      matches += static_cast<double>(clipped_matches(cands[i], refs[i], n));
      total += static_cast<double>(ngrams(cands[i], n).size());
    }
    if (matches == 0) matches = 1e-9;
    if (total == 0) total = 1;
    log_sum += std::log(matches / total);
  }
  double bp = 1.0;
  if (cand_len == 0) {
    bp = 0.0;
  } else if (cand_len < ref_len) {
    bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  }
  return bp * std::exp(log_sum / 4.0);
}

struct Prf {
  double recall, precision, f1;
};

inline Prf prf(double overlap, double ref_count, double cand_count) {
  const double r = ref_count > 0 ? overlap / ref_count : 0;
  const double p = cand_count > 0 ? overlap / cand_count : 0;
  return {r, p, r + p > 0 ? 2 * r * p / (r + p) : 0};
}

inline Prf rouge_n(const Words& cand, const Words& ref, std::size_t n) {
  return prf(static_cast<double>(clipped_matches(cand, ref, n)), static_cast<double>(ngrams(ref, n).size()),
             static_cast<double>(ngrams(cand, n).size()));
}

inline bool is_subsequence(const Words& sub, const Words& seq) {
  std::size_t j = 0;
  for (const auto& w : seq)
    if (j < sub.size() && sub[j] == w) ++j;
  return j == sub.size();
}

// Longest common subsequence by trying every subsequence of the shorter side.
inline std::size_t lcs(const Words& a, const Words& b) {
  const Words& s = a.size() <= b.size() ? a : b;
  const Words& t = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (unsigned long mask = 0; mask < (1ul << s.size()); ++mask) {
    Words sub;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (mask & (1ul << i)) sub.push_back(s[i]);
    if (sub.size() > best && is_subsequence(sub, t)) best = sub.size();
  }
  return best;
}

inline Prf rouge_l(const Words& cand, const Words& ref) {
  return prf(static_cast<double>(lcs(cand, ref)), static_cast<double>(ref.size()), static_cast<double>(cand.size()));
}

// Probability that a random positive outscores a random negative, ties half.
inline double auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0;
  for (double p : pos)
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  return wins / static_cast<double>(pos.size() * neg.size());
}

// Scalar Adam on one parameter.
struct ScalarAdam {
  double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0, v = 0;
  int t = 0;
  double step(double theta, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return theta - lr * mh / (std::sqrt(vh) + eps);
  }
};

// Symmetric InfoNCE on row vectors, written out with plain loops.
inline double info_nce(const std::vector<std::vector<double>>& c, const std::vector<std::vector<double>>& t, double tau) {
  const std::size_t n = c.size();
  auto normed = [](std::vector<double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    for (double& x : v) x /= std::sqrt(s);
    return v;
  };
  std::vector<std::vector<double>> cn, tn;
  for (std::size_t i = 0; i < n; ++i) {
    cn.push_back(normed(c[i]));
    tn.push_back(normed(t[i]));
  }
  std::vector<std::vector<double>> s(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0;
      for (std::size_t k = 0; k < cn[i].size(); ++k) d += cn[i][k] * tn[j][k];
      s[i][j] = d / tau;
    }
  double rows = 0, cols = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double zr = 0, zc = 0;
    for (std::size_t j = 0; j < n; ++j) {
      zr += std::exp(s[i][j]);
      zc += std::exp(s[j][i]);
    }
    rows += std::log(zr) - s[i][i];
    cols += std::log(zc) - s[i][i];
  }
  return 0.5 * (rows + cols) / static_cast<double>(n);
}

}  // namespace oracle
