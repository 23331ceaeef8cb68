// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "cadpt/config.hpp"
#include "cadpt/encoder.hpp"

using namespace cadpt;
namespace fs = std::filesystem;

namespace {

ChartSpec simple(ChartType type, std::vector<double> values) {
  ChartSpec s;
  s.chart_type = type;
  s.title = "weekly sales";
  for (std::size_t i = 0; i < values.size(); ++i) s.categories.push_back(wordlists::categories()[12 + i]);
  s.series = {std::move(values)};
  return s;
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / ("cadpt_dataset_" + name); }

std::size_t ingest_line(const std::vector<std::string>& lines) {
  const auto path = scratch("ingest.jsonl");
  {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << '\n';
  }
  try {
    load_jsonl(path.string());
  } catch (const IngestError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("synthetic corpus is deterministic per seed", "[dataset]") {
  CHECK(generate_synthetic(50, 3) == generate_synthetic(50, 3));
  CHECK(generate_synthetic(50, 3) != generate_synthetic(50, 4));
  CHECK_THROWS_AS(generate_synthetic(0, 1), ContractError);
}

TEST_CASE("splits are 90/5/5", "[dataset]") {
  auto d = generate_synthetic(100, 8);
  CHECK(filter_split(d, Split::kTrain).size() == 90);
  CHECK(filter_split(d, Split::kVal).size() == 5);
  CHECK(filter_split(d, Split::kTest).size() == 5);
}

TEST_CASE("chart types are roughly uniform", "[dataset]") {
  auto d = generate_synthetic(3000, 12);
  std::map<ChartType, std::size_t> counts;
  for (const auto& s : d) {
    ++counts[s.spec.chart_type];
    CHECK(s.spec.categories.size() >= 3);
    CHECK(s.spec.categories.size() <= 8);
    CHECK(s.summary == templated_summary(s.spec));
    for (const auto& series : s.spec.series)
      for (double v : series) CHECK((v >= 1 && v <= 100 && v == std::floor(v)));
  }
  for (auto [type, n] : counts) {
    INFO(to_string(type) << " " << n);
    CHECK(n >= 840);
    CHECK(n <= 1140);
  }
}

TEST_CASE("bar summary names the extremes", "[dataset]") {
  auto text = templated_summary(simple(ChartType::kBar, {5, 9, 2}));
  CHECK(contains(text, "beta has the highest value at 9"));
  CHECK(contains(text, "gamma has the lowest value at 2"));
}

TEST_CASE("line summary names the trend", "[dataset]") {
  CHECK(contains(templated_summary(simple(ChartType::kLine, {3, 1, 7})), "increased from 3 to 7"));
  CHECK(contains(templated_summary(simple(ChartType::kLine, {7, 9, 3})), "decreased from 7 to 3"));
  CHECK(contains(templated_summary(simple(ChartType::kLine, {4, 8, 4})), "remained steady"));
}

TEST_CASE("pie ties resolve to the earliest category", "[dataset]") {
  auto text = templated_summary(simple(ChartType::kPie, {50, 50}));
  CHECK(contains(text, "the largest share is alpha at 50"));
  CHECK(contains(text, "the smallest share is alpha at 50"));
}

TEST_CASE("chart validation", "[dataset]") {
  auto bad = simple(ChartType::kPie, {5, -1, 3});
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  auto ragged = simple(ChartType::kBar, {1, 2, 3});
  ragged.series.push_back({1, 2});
  ragged.complexity = Complexity::kComplex;
  CHECK_THROWS_AS(ragged.validate(), ValidationError);
  auto one = simple(ChartType::kBar, {1});
  CHECK_THROWS_AS(one.validate(), ValidationError);
  CHECK_THROWS_AS(parse_chart_type("scatter"), ValidationError);
}

TEST_CASE("jsonl round trip", "[dataset]") {
  auto d = generate_synthetic(30, 5);
  const auto path = scratch("roundtrip.jsonl");
  save_jsonl(path.string(), d);
  CHECK(load_jsonl(path.string()) == d);
}

TEST_CASE("ingest errors carry the offending line", "[dataset]") {
  const std::string good = sample_to_json(generate_synthetic(1, 1)[0]).dump();
  auto other = generate_synthetic(1, 1)[0];
  other.id = "second";
  const std::string good2 = sample_to_json(other).dump();

  auto missing = sample_to_json(other);
  missing.erase("summary");
  CHECK(ingest_line({good, missing.dump()}) == 2);
  CHECK(ingest_line({good, good2, good}) == 3);  // duplicate id
  CHECK(ingest_line({good, "", "{not json"}) == 3);
  auto bad_type = sample_to_json(other);
  bad_type["chart_type"] = "radar";
  CHECK(ingest_line({bad_type.dump()}) == 1);
  CHECK(ingest_line({good, good2}) == 0);
}

TEST_CASE("the closed vocabulary covers every generated summary", "[dataset]") {
  auto tok = closed_tokenizer();
  auto d = generate_synthetic(1000, 21);
  for (const auto& s : d) {
    auto ids = tok.encode(s.summary);
    CHECK(std::find(ids.begin(), ids.end(), Tokenizer::kUnk) == ids.end());
  }
  auto prompt = tok.encode(ModelConfig{}.prompt);
  CHECK(std::find(prompt.begin(), prompt.end(), Tokenizer::kUnk) == prompt.end());
}

TEST_CASE("run data honours the split and limit", "[dataset]") {
  DataConfig d;
  d.n = 100;
  d.train_limit = 16;
  d.eval_split = "train";
  auto rd = load_run_data(d);
  CHECK(rd.train.size() == 16);
  CHECK(rd.eval == rd.train);
  d.eval_split = "val";
  CHECK(load_run_data(d).eval.size() == 5);
}
