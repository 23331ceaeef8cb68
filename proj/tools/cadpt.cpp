// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// cadpt: data generation, staged training, evaluation, ablation and gradient
// checking for the chart adapter.
//
//   cadpt generate-data --n 400 --seed 7 --out data.jsonl
//   cadpt train --config run.json --variant full --out runs/full
//   cadpt evaluate --checkpoint runs/full/stage3.ckpt --split test --out eval.json
//   cadpt summarize --checkpoint runs/full/stage3.ckpt --chart-json chart.json
//   cadpt gradcheck
//   cadpt ablate --config run.json --out runs/ablation
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cadpt/cadpt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "run configuration (JSON); defaults apply when omitted")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "override the run seed");
  cmd->add_option("--data", f.data, "override the JSONL manifest path");
}

cadpt::RunConfig resolve(const RunFlags& f) {
  auto cfg = f.config.empty() ? cadpt::RunConfig{} : cadpt::load_run_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  // Manifest paths in a config file are relative to that file.
  if (!f.data.empty()) {
    cfg.data.path = f.data;
  } else if (!cfg.data.path.empty() && !f.config.empty() && fs::path(cfg.data.path).is_relative()) {
    cfg.data.path = (fs::path(f.config).parent_path() / cfg.data.path).string();
  }
  if (!cfg.data.path.empty()) cfg.data.path = fs::absolute(cfg.data.path).lexically_normal().string();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("short write to " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json stage_json(const cadpt::StageRecord& rec) {
  json j = rec.report.to_json();
  j["trainable"] = rec.plan.trainable;
  j["epochs"] = rec.plan.settings.epochs;
  j["lr"] = rec.plan.settings.lr;
  j["batch_size"] = rec.plan.settings.batch_size;
  return j;
}

int cmd_generate_data(std::size_t n, std::uint64_t seed, const std::string& out) {
  auto samples = cadpt::generate_synthetic(n, seed);
  cadpt::save_jsonl(out, samples);
  std::cout << "wrote " << samples.size() << " samples to " << out << "\n";
  return 0;
}

cadpt::PipelineResult train_variant(const cadpt::RunConfig& cfg, cadpt::AblationVariant variant, const fs::path& out) {
  auto data = cadpt::load_run_data(cfg.data);
  if (data.train.size() < 2) throw std::runtime_error("training split has fewer than 2 samples");
  const auto tokenizer = cadpt::tokenizer_for(data.train);
  fs::create_directories(out);
  tokenizer.save((out / "vocab.txt").string());
  const auto name = cadpt::to_string(variant);

  std::ofstream losses(out / "train_report.jsonl");
  if (!losses) throw std::runtime_error("cannot write " + (out / "train_report.jsonl").string());
  json stages = json::array();
  auto on_stage = [&](const cadpt::StageRecord& rec, const cadpt::ChartSummarizer<float>& model) {
    for (const auto& r : rec.report.records())
      losses << json{{"step", r.step}, {"stage", r.stage}, {"loss", r.loss}}.dump() << "\n";
    stages.push_back(stage_json(rec));
    const auto ckpt = out / ("stage" + std::to_string(rec.plan.stage) + ".ckpt");
    cadpt::save_model(ckpt.string(), model, cfg, name, rec.plan.stage);
    std::cerr << "[" << name << "] stage " << rec.plan.stage << ": " << rec.report.losses.size() << " steps, loss "
              << rec.report.initial_loss << " -> " << (rec.report.losses.empty() ? 0.0 : rec.report.losses.back())
              << "\n";
  };
  auto result = cadpt::run_pipeline(variant, data.train, data.eval, cfg.pipeline(), tokenizer, on_stage);
  write_json(out / "stage_reports.json", stages);
  auto report = result.eval.to_json();
  report["variant"] = name;
  report["final_train_loss"] = result.final_train_loss;
  write_json(out / "eval_report.json", report);
  write_json(out / "config.json", cadpt::to_json(cfg));
  return result;
}

int cmd_train(const RunFlags& flags, const std::string& variant, const std::string& out) {
  const auto cfg = resolve(flags);
  auto res = train_variant(cfg, cadpt::parse_variant(variant), out);
  std::cout << cadpt::table_header() << "\n" << cadpt::format_table_row(variant, res.eval) << "\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data_path, const std::string& split,
                 const std::string& out) {
  auto snap = cadpt::load_model(checkpoint);
  auto all = data_path.empty() ? (snap.run.data.path.empty()
                                      ? cadpt::generate_synthetic(snap.run.data.n, snap.run.data.seed)
                                      : cadpt::load_jsonl(snap.run.data.path))
                               : cadpt::load_jsonl(data_path);
  auto samples = cadpt::filter_split(all, cadpt::parse_split(split));
  if (samples.empty()) throw std::runtime_error("split '" + split + "' has no samples");
  auto report = cadpt::evaluate_corpus(snap.model, samples, snap.run.training.max_decode_len).to_json();
  report["variant"] = snap.variant;
  report["stage"] = snap.stage;
  report["split"] = split;
  if (out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json(out, report);
    std::cout << cadpt::table_header() << "\n"
              << cadpt::format_table_row(snap.variant, cadpt::EvalReport::from_json(report)) << "\n";
  }
  return 0;
}

int cmd_summarize(const std::string& checkpoint, const std::string& chart) {
  auto snap = cadpt::load_model(checkpoint);
  json j;
  std::error_code ec;
  if (fs::is_regular_file(chart, ec)) {
    std::ifstream in(chart);
    j = json::parse(in);
  } else {
    j = json::parse(chart);
  }
  // Accept either a bare chart spec or a manifest line with a "spec" field.
  auto spec = cadpt::spec_from_json(j.contains("spec") ? j.at("spec") : j);
  std::cout << snap.model.summarize(spec, snap.run.training.max_decode_len) << "\n";
  return 0;
}

int cmd_gradcheck(const RunFlags& flags, std::size_t n_seeds) {
  const auto cfg = resolve(flags);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < n_seeds; ++i) seeds.push_back(cfg.seed + i);
  std::size_t failed = 0;
  std::printf("%-22s %6s %12s %8s  %s\n", "check", "seed", "rel_error", "tol", "result");
  for (const auto& r : cadpt::run_gradient_suite(seeds)) {
    std::printf("%-22s %6llu %12.3e %8.0e  %s\n", r.name.c_str(), static_cast<unsigned long long>(r.seed),
                r.max_rel_error, r.tolerance, r.passed() ? "pass" : "FAIL");
    failed += r.passed() ? 0 : 1;
  }
  std::printf("%zu failing\n", failed);
  return failed == 0 ? 0 : 1;
}

int cmd_ablate(const RunFlags& flags, const std::string& out) {
  const auto cfg = resolve(flags);
  fs::create_directories(out);
  json rows = json::array();
  std::string table = cadpt::table_header() + "\n";
  for (auto v : cadpt::all_variants()) {
    const auto name = cadpt::to_string(v);
    auto res = train_variant(cfg, v, fs::path(out) / name);
    auto row = res.eval.to_json();
    row.erase("samples");
    row["variant"] = name;
    row["final_train_loss"] = res.final_train_loss;
    rows.push_back(row);
    table += cadpt::format_table_row(name, res.eval) + "\n";
  }
  write_json(fs::path(out) / "ablation.json", rows);
  write_text(fs::path(out) / "ablation.txt", table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chart adapter training and evaluation"};
  app.require_subcommand(1);

  std::size_t gen_n = 400;
  std::uint64_t gen_seed = 7;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate-data", "write a synthetic JSONL manifest");
  gen->add_option("--n", gen_n, "number of samples");
  gen->add_option("--seed", gen_seed, "corpus seed");
  gen->add_option("--out", gen_out, "output manifest")->required();

  RunFlags train_flags;
  std::string variant = "full", train_out;
  auto* train = app.add_subcommand("train", "run the staged pipeline for one variant");
  add_run_flags(train, train_flags);
  train->add_option("--variant", variant, "full, no_stage1, no_stage2, cha_only or llm_only");
  train->add_option("--out", train_out, "output directory")->required();

  std::string eval_ckpt, eval_data, eval_split = "test", eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a data split");
  evaluate->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--data", eval_data, "JSONL manifest; defaults to the run's own data");
  evaluate->add_option("--split", eval_split, "train, val or test");
  evaluate->add_option("--out", eval_out, "report path; stdout when omitted");

  std::string sum_ckpt, sum_chart;
  auto* summarize = app.add_subcommand("summarize", "summarize one chart");
  summarize->add_option("--checkpoint", sum_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  summarize->add_option("--chart-json", sum_chart, "chart spec as a file path or inline JSON")->required();

  RunFlags grad_flags;
  std::size_t grad_seeds = 5;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every gradient");
  add_run_flags(gradcheck, grad_flags);
  gradcheck->add_option("--seeds", grad_seeds, "number of seeds, starting at the run seed")->check(CLI::PositiveNumber);

  RunFlags abl_flags;
  std::string abl_out;
  auto* ablate = app.add_subcommand("ablate", "train and score all five variants");
  add_run_flags(ablate, abl_flags);
  ablate->add_option("--out", abl_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate_data(gen_n, gen_seed, gen_out);
    if (*train) return cmd_train(train_flags, variant, train_out);
    if (*evaluate) return cmd_evaluate(eval_ckpt, eval_data, eval_split, eval_out);
    if (*summarize) return cmd_summarize(sum_ckpt, sum_chart);
    if (*gradcheck) return cmd_gradcheck(grad_flags, grad_seeds);
    if (*ablate) return cmd_ablate(abl_flags, abl_out);
  } catch (const std::exception& e) {
    std::cerr << "cadpt: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
