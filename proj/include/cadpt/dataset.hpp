// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic chart-summarization corpus and JSONL manifests.
//
// Record layout, one JSON object per line:
//   {"id": str, "chart_type": "bar"|"line"|"pie", "complexity": "simple"|"complex",
//    "title": str, "categories": [str], "series": [[number]], "summary": str,
//    "source": str, "split": "train"|"val"|"test"}
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cadpt/random.hpp"
#include "cadpt/text.hpp"

namespace cadpt {

enum class ChartType { kBar, kLine, kPie };
enum class Complexity { kSimple, kComplex };

inline std::string to_string(ChartType t) {
  switch (t) {
    case ChartType::kBar: return "bar";
    case ChartType::kLine: return "line";
    case ChartType::kPie: return "pie";
  }
  return "bar";
}

inline std::string to_string(Complexity c) { return c == Complexity::kSimple ? "simple" : "complex"; }

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed JSONL input; line() is 1-based.
class IngestError : public std::runtime_error {
 public:
  IngestError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline ChartType parse_chart_type(const std::string& s) {
  if (s == "bar") return ChartType::kBar;
  if (s == "line") return ChartType::kLine;
  if (s == "pie") return ChartType::kPie;
  throw ValidationError("unknown chart type '" + s + "'");
}

inline Complexity parse_complexity(const std::string& s) {
  if (s == "simple") return Complexity::kSimple;
  if (s == "complex") return Complexity::kComplex;
  throw ValidationError("unknown complexity '" + s + "'");
}

struct ChartSpec {
  ChartType chart_type = ChartType::kBar;
  std::string title;
  std::vector<std::string> categories;
  std::vector<std::vector<double>> series;  // one or two series, each one value per category
  Complexity complexity = Complexity::kSimple;

  void validate() const {
    if (series.empty() || series.front().empty()) throw ValidationError("chart has an empty series");
    if (categories.size() < 2) throw ValidationError("chart needs at least two categories");
    for (const auto& s : series) {
      if (s.size() != categories.size()) {
        throw ValidationError("series length " + std::to_string(s.size()) + " does not match " +
                              std::to_string(categories.size()) + " categories");
      }
      for (double v : s) {
        if (!std::isfinite(v)) throw ValidationError("series value is not finite");
        if (chart_type == ChartType::kPie && v < 0) throw ValidationError("pie values must be nonnegative");
      }
    }
    const std::size_t want = complexity == Complexity::kComplex ? 2 : 1;
    if (series.size() != want) {
      throw ValidationError(to_string(complexity) + " chart must carry " + std::to_string(want) + " series, got " +
                            std::to_string(series.size()));
    }
  }

  bool operator==(const ChartSpec&) const = default;
};

enum class Split { kTrain, kVal, kTest };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ValidationError("unknown split '" + s + "'");
}

struct ChartSample {
  std::string id;
  ChartSpec spec;
  std::string summary;
  std::string source;
  Split split = Split::kTrain;

  bool operator==(const ChartSample&) const = default;
};

namespace wordlists {
inline const std::vector<std::string>& qualifiers() {
  static const std::vector<std::string> v = {"annual", "monthly", "regional", "quarterly", "weekly",
                                             "average", "total",   "online",   "national",  "local"};
  return v;
}
inline const std::vector<std::string>& subjects() {
  static const std::vector<std::string> v = {"sales",  "revenue",  "profit",  "population", "exports",   "imports",
                                             "rainfall", "visitors", "students", "downloads", "emissions", "users"};
  return v;
}
inline const std::vector<std::string>& categories() {
  static const std::vector<std::string> v = {"apple", "banana", "cherry", "grape", "lemon",  "mango",
                                             "orange", "peach", "north",  "south", "east",   "west",
                                             "alpha", "beta",   "gamma",  "delta", "red",    "blue",
                                             "green", "yellow", "spring", "summer", "autumn", "winter"};
  return v;
}
// Every fixed word the summary templates and the default prompt can emit.
inline const std::vector<std::string>& template_words() {
  static const std::vector<std::string> v = {
      "this",    "bar",    "line",    "pie",       "chart",  "shows", "has",     "the",    "highest", "value",
      "at",      "and",    "lowest",  "second",    "series", "is",    "for",     "tracks", "over",    "points",
      "values",  "from",   "to",      "with",      "a",      "peak",  "of",      "ends",   "divides", "into",
      "parts",   "largest", "share",  "smallest",  "increased", "decreased", "remained", "steady", "summarize",
      ".",       ","};
  return v;
}
}  // namespace wordlists

/// Every word a generated summary (or the default prompt) can contain.
inline std::vector<std::string> closed_vocabulary_words() {
  std::vector<std::string> w = wordlists::template_words();
  for (const auto* list : {&wordlists::qualifiers(), &wordlists::subjects(), &wordlists::categories()})
    w.insert(w.end(), list->begin(), list->end());
  for (int i = 0; i <= 100; ++i) w.push_back(std::to_string(i));
  return w;
}

inline Tokenizer closed_tokenizer() { return Tokenizer(closed_vocabulary_words()); }

inline std::string format_value(double v) {
  if (std::floor(v) == v && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

namespace detail {
// Ties break toward the lowest index.
inline std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}
inline std::size_t argmin(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}
}  // namespace detail

/// Deterministic reference summary. Extremes refer to the first series;
/// equal values resolve to the earliest category.
inline std::string templated_summary(const ChartSpec& spec) {
  spec.validate();
  const auto& values = spec.series.front();
  const auto& cats = spec.categories;
  const std::size_t hi = detail::argmax(values), lo = detail::argmin(values);
  std::ostringstream os;
  switch (spec.chart_type) {
    case ChartType::kBar:
      os << "this bar chart shows " << spec.title << ". " << cats[hi] << " has the highest value at "
         << format_value(values[hi]) << " and " << cats[lo] << " has the lowest value at " << format_value(values[lo])
         << ".";
      if (spec.series.size() > 1) {
        const std::size_t hi2 = detail::argmax(spec.series[1]);
        os << " the second series is highest for " << cats[hi2] << " at " << format_value(spec.series[1][hi2]) << ".";
      }
      break;
    case ChartType::kLine: {
      const double first = values.front(), last = values.back();
      const char* trend = last > first ? "increased" : (last < first ? "decreased" : "remained steady");
      os << "this line chart tracks " << spec.title << " over " << values.size() << " points. the values " << trend
         << " from " << format_value(first) << " to " << format_value(last) << ", with a peak at " << cats[hi]
         << " of " << format_value(values[hi]) << ".";
      if (spec.series.size() > 1) os << " the second series ends at " << format_value(spec.series[1].back()) << ".";
      break;
    }
    case ChartType::kPie:
      os << "this pie chart divides " << spec.title << " into " << values.size() << " parts. the largest share is "
         << cats[hi] << " at " << format_value(values[hi]) << " and the smallest share is " << cats[lo] << " at "
         << format_value(values[lo]) << ".";
      break;
  }
  return os.str();
}

/// Seeded corpus: uniform chart types, 3-8 categories, integer values 1-100.
/// Bar and line charts are complex (two series) with probability 1/2.
/// Splits are 90/5/5 (val and test each floor(n/20)), assigned by a seeded permutation.
inline std::vector<ChartSample> generate_synthetic(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ContractError("generate_synthetic: n must be at least 1");
  Rng rng = derive_rng(seed, "data");
  std::uniform_int_distribution<int> type_dist(0, 2), count_dist(3, 8), value_dist(1, 100);
  std::uniform_int_distribution<std::size_t> qual_dist(0, wordlists::qualifiers().size() - 1),
      subj_dist(0, wordlists::subjects().size() - 1);
  std::bernoulli_distribution complex_dist(0.5);
  std::vector<ChartSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ChartSample s;
    char id[64];
    std::snprintf(id, sizeof id, "syn-%llu-%06zu", static_cast<unsigned long long>(seed), i);
    s.id = id;
    s.source = "synthetic";
    auto& spec = s.spec;
    spec.chart_type = static_cast<ChartType>(type_dist(rng));
    spec.title = wordlists::qualifiers()[qual_dist(rng)] + " " + wordlists::subjects()[subj_dist(rng)];
    const int k = count_dist(rng);
    std::vector<std::string> pool = wordlists::categories();
    for (int c = 0; c < k; ++c) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(c), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(c)], pool[pick(rng)]);
    }
    spec.categories.assign(pool.begin(), pool.begin() + k);
    const bool is_complex = spec.chart_type != ChartType::kPie && complex_dist(rng);
    spec.complexity = is_complex ? Complexity::kComplex : Complexity::kSimple;
    spec.series.resize(is_complex ? 2 : 1);
    for (auto& series : spec.series)
      for (int c = 0; c < k; ++c) series.push_back(value_dist(rng));
    s.summary = templated_summary(spec);
    out.push_back(std::move(s));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t held = n / 20;
  for (std::size_t j = 0; j < held; ++j) out[perm[j]].split = Split::kVal;
  for (std::size_t j = held; j < 2 * held; ++j) out[perm[j]].split = Split::kTest;
  return out;
}

inline std::vector<ChartSample> filter_split(const std::vector<ChartSample>& samples, Split split) {
  std::vector<ChartSample> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
               [split](const ChartSample& s) { return s.split == split; });
  return out;
}

inline nlohmann::json spec_to_json(const ChartSpec& spec) {
  return {{"chart_type", to_string(spec.chart_type)},
          {"complexity", to_string(spec.complexity)},
          {"title", spec.title},
          {"categories", spec.categories},
          {"series", spec.series}};
}

/// Reads the chart fields of a record; complexity defaults from the series count.
inline ChartSpec spec_from_json(const nlohmann::json& j) {
  ChartSpec spec;
  for (const char* key : {"chart_type", "title", "categories", "series"}) {
    if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  }
  spec.chart_type = parse_chart_type(j.at("chart_type").get<std::string>());
  spec.title = j.at("title").get<std::string>();
  spec.categories = j.at("categories").get<std::vector<std::string>>();
  spec.series = j.at("series").get<std::vector<std::vector<double>>>();
  if (j.contains("complexity")) {
    spec.complexity = parse_complexity(j.at("complexity").get<std::string>());
  } else {
    spec.complexity = spec.series.size() > 1 ? Complexity::kComplex : Complexity::kSimple;
  }
  spec.validate();
  return spec;
}

inline nlohmann::json sample_to_json(const ChartSample& s) {
  nlohmann::json j = {{"id", s.id}};
  j.update(spec_to_json(s.spec));
  j["summary"] = s.summary;
  j["source"] = s.source;
  j["split"] = to_string(s.split);
  return j;
}

inline void save_jsonl(const std::string& path, const std::vector<ChartSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& s : samples) out << sample_to_json(s).dump() << '\n';
}

inline std::vector<ChartSample> load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<ChartSample> out;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IngestError(lineno, std::string("malformed JSON: ") + e.what());
    }
    try {
      for (const char* key : {"id", "chart_type", "complexity", "title", "categories", "series", "summary", "source",
                              "split"}) {
        if (!j.contains(key)) throw IngestError(lineno, std::string("missing field '") + key + "'");
      }
      ChartSample s;
      s.id = j.at("id").get<std::string>();
      s.spec = spec_from_json(j);
      s.summary = j.at("summary").get<std::string>();
      s.source = j.at("source").get<std::string>();
      s.split = parse_split(j.at("split").get<std::string>());
      if (s.summary.empty()) throw IngestError(lineno, "empty summary");
      if (!seen.insert(s.id).second) throw IngestError(lineno, "duplicate id '" + s.id + "'");
      out.push_back(std::move(s));
    } catch (const IngestError&) {
      throw;
    } catch (const std::exception& e) {
      throw IngestError(lineno, e.what());
    }
  }
  return out;
}

}  // namespace cadpt
