// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cadpt {

inline bool is_punct_token(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '(' || c == ')';
}

/// Lowercases, detaches punctuation, and splits on whitespace.
inline std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (is_punct_token(ch)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

/// Joins words with single spaces, reattaching punctuation to its neighbour.
inline std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  bool suppress_space = true;
  for (const auto& w : words) {
    const bool closing = w.size() == 1 && is_punct_token(w[0]) && w[0] != '(';
    if (!suppress_space && !closing) out.push_back(' ');
    out += w;
    suppress_space = w == "(";
  }
  return out;
}

/// Closed word-level vocabulary. Ids 0..4 are reserved for special tokens.
class Tokenizer {
 public:
  static constexpr std::int64_t kPad = 0;
  static constexpr std::int64_t kBos = 1;
  static constexpr std::int64_t kEos = 2;
  static constexpr std::int64_t kChart = 3;
  static constexpr std::int64_t kUnk = 4;

  Tokenizer() : Tokenizer(std::vector<std::string>{}) {}

  /// Specials followed by the sorted, de-duplicated words.
  explicit Tokenizer(std::vector<std::string> words) {
    vocab_ = {"<pad>", "<bos>", "<eos>", "<chart>", "<unk>"};
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    for (auto& w : words) {
      if (w.empty() || (w.front() == '<' && w.back() == '>')) continue;
      vocab_.push_back(std::move(w));
    }
    index();
  }

  /// Builds the vocabulary from every word occurring in texts.
  static Tokenizer from_corpus(const std::vector<std::string>& texts) {
    std::vector<std::string> words;
    for (const auto& t : texts) {
      auto w = normalize_words(t);
      words.insert(words.end(), w.begin(), w.end());
    }
    return Tokenizer(std::move(words));
  }

  /// Exact id order: vocab[i] is token i. The special tokens must lead.
  static Tokenizer from_vocabulary(std::vector<std::string> vocab) {
    const std::vector<std::string> specials = {"<pad>", "<bos>", "<eos>", "<chart>", "<unk>"};
    if (vocab.size() < specials.size() || !std::equal(specials.begin(), specials.end(), vocab.begin())) {
      throw std::runtime_error("vocabulary does not start with the special tokens");
    }
    Tokenizer t;
    t.vocab_ = std::move(vocab);
    t.index();
    return t;
  }

  /// One token per line; the line number is the id.
  static Tokenizer load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary " + path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    try {
      return from_vocabulary(std::move(lines));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(path + ": " + e.what());
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write vocabulary " + path);
    for (const auto& w : vocab_) out << w << '\n';
  }

  std::size_t size() const { return vocab_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocab_; }

  std::int64_t id(const std::string& word) const {
    auto it = ids_.find(word);
    return it == ids_.end() ? kUnk : it->second;
  }

  const std::string& token(std::int64_t id) const { return vocab_.at(static_cast<std::size_t>(id)); }

  std::vector<std::int64_t> encode(std::string_view text) const {
    std::vector<std::int64_t> out;
    for (const auto& w : normalize_words(text)) out.push_back(id(w));
    return out;
  }

  /// Special tokens are dropped from the decoded text.
  std::string decode(const std::vector<std::int64_t>& ids) const {
    std::vector<std::string> words;
    for (auto i : ids) {
      if (i == kPad || i == kBos || i == kEos || i == kChart) continue;
      words.push_back(token(i));
    }
    return join_words(words);
  }

 private:
  void index() {
    ids_.clear();
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      if (!ids_.emplace(vocab_[i], static_cast<std::int64_t>(i)).second) {
        throw std::runtime_error("duplicate vocabulary entry '" + vocab_[i] + "'");
      }
    }
  }

  std::vector<std::string> vocab_;
  std::map<std::string, std::int64_t, std::less<>> ids_;
};

}  // namespace cadpt
