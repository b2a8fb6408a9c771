// Copyright 2026 The CoAT Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// coat: command-line front end for the demonstration-selection pipeline.
//
//   coat generate --config run.json --seed 1 --out data/dataset.jsonl
//   coat select   --config run.json --seed 1 --strategy coat --scorer local --out data/prompts.jsonl
//   coat train    --config run.json --seed 1 --out data/model.ckpt.json
//   coat eval     --config run.json --seed 1 --out data/reports
//   coat compare  --a a/reports.csv --b b/reports.csv
//   coat score    --config run.json --seed 1 --scorer uniform --prompt "..." --target "..."

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "coat/config.hpp"
#include "coat/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string strategy;
  std::string scorer;
  std::string endpoint;
  std::string metric;
  std::optional<unsigned> workers;
  std::string dataset;
  std::string prompts;
  std::string checkpoint;
  std::string report_a;
  std::string report_b;
  std::string prompt;
  std::string target;
  bool health = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

coat::Json LoadConfigDocument(const std::string& path) {
  if (path.empty()) return coat::Json::object();
  try {
    auto j = coat::Json::parse(coat::ReadFile(path));
    if (!j.is_object()) throw UsageError("--config: top level must be a JSON object");
    return j;
  } catch (const coat::Json::exception& e) {
    throw UsageError("--config: " + std::string(e.what()));
  }
}

// Writes flag values into the config document so that the digest sees them.
coat::RunConfig ResolveConfig(const Flags& f) {
  coat::Json root = LoadConfigDocument(f.config);
  if (f.seed) root["seed"] = *f.seed;
  if (f.workers) root["workers"] = *f.workers;
  if (!f.strategy.empty()) root["select"]["strategy"] = f.strategy;
  if (!f.scorer.empty()) root["scorer"]["kind"] = f.scorer;
  if (!f.endpoint.empty()) root["scorer"]["endpoint"] = f.endpoint;
  if (!f.metric.empty()) root["eval"]["metric"] = f.metric;
  if (!f.dataset.empty()) root["paths"]["dataset"] = f.dataset;
  if (!f.prompts.empty()) root["paths"]["prompts"] = f.prompts;
  if (!f.checkpoint.empty()) root["paths"]["checkpoint"] = f.checkpoint;
  coat::RunConfig cfg = coat::ParseRunConfig(root);
  if (!cfg.seed) throw UsageError("--seed: a seed is required (flag or config 'seed')");
  return cfg;
}

std::string OutOr(const Flags& f, const std::string& fallback) { return f.out.empty() ? fallback : f.out; }

int RunGenerate(const Flags& f) {
  auto cfg = ResolveConfig(f);
  const std::string out = OutOr(f, cfg.paths.dataset);
  auto gen = coat::pipeline::Generate(cfg, out);
  std::cout << "wrote " << gen.samples.size() << " samples (" << gen.train_keys.size() << " train chains, "
            << gen.eval_keys.size() << " held-out chains) to " << out << "\n";
  return 0;
}

int RunSelect(const Flags& f) {
  auto cfg = ResolveConfig(f);
  if (cfg.select.strategy == coat::DemoStrategy::kCoat && cfg.scorer.kind.empty())
    throw UsageError("--scorer: strategy 'coat' needs a scorer (flag or config scorer.kind)");
  const std::string out = OutOr(f, cfg.paths.prompts);
  auto set = coat::pipeline::Select(cfg, out);
  std::cout << "wrote " << set.prompts.size() << " prompts to " << out << " (" << set.skipped << " skipped)\n";
  return 0;
}

int RunTrain(const Flags& f) {
  auto cfg = ResolveConfig(f);
  const std::string out = OutOr(f, cfg.paths.checkpoint);
  auto outcome = coat::pipeline::TrainStage(cfg, out);
  std::cout << "trained " << outcome.result.steps << " steps, best eval loss " << outcome.result.best_eval_loss
            << " at step " << outcome.result.best_step << (outcome.result.early_stopped ? " (early stop)" : "")
            << "; checkpoint " << out << "\n";
  return 0;
}

int RunEval(const Flags& f) {
  auto cfg = ResolveConfig(f);
  const std::string out = OutOr(f, cfg.paths.reports);
  auto gain = coat::pipeline::EvalStage(cfg, out);
  std::cout << coat::evalharness::ReportsToMarkdown({gain.concept_result.report, gain.random_result.report})
            << coat::pipeline::GainMarkdown(gain);
  return 0;
}

int RunCompare(const Flags& f) {
  if (f.report_a.empty() || f.report_b.empty()) throw UsageError("--a/--b: both report files are required");
  const auto a = coat::evalharness::ReportsFromCsv(coat::ReadFile(f.report_a));
  const auto b = coat::evalharness::ReportsFromCsv(coat::ReadFile(f.report_b));
  const auto outcome = coat::evalharness::CompareTasks(a, b);
  std::string table = "| task | verdict |\n|---|---|\n";
  for (const auto& [task, verdict] : outcome.verdicts) table += "| " + task + " | " + verdict + " |\n";
  table += "\nwins_a=" + std::to_string(outcome.wins_a) + " wins_b=" + std::to_string(outcome.wins_b) +
           " similar=" + std::to_string(outcome.similar) + "\n";
  if (!f.out.empty()) coat::WriteFile(f.out, table);
  std::cout << table;
  return 0;
}

int RunScore(const Flags& f) {
  auto cfg = ResolveConfig(f);
  if (cfg.scorer.kind.empty()) throw UsageError("--scorer: no scorer configured");
  std::optional<coat::Dataset> data;
  if (cfg.scorer.kind == "local" && cfg.scorer.checkpoint.empty()) data = coat::pipeline::LoadDataset(cfg);
  auto handle = coat::pipeline::MakeScorer(cfg, data ? &*data : nullptr);
  if (f.health) {
    auto* remote = dynamic_cast<coat::RemoteScorer*>(handle.scorer.get());
    if (!remote) throw UsageError("--health: only meaningful for the remote scorer");
    std::cout << nlohmann::json{{"status", "ok"}, {"model", remote->Health()}}.dump() << "\n";
    return 0;
  }
  if (f.target.empty()) throw UsageError("--target: a target is required");
  std::cout << handle.scorer->Score(f.prompt, f.target).to_json().dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coat: concept-aware demonstration selection toolkit"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "run config JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "master seed (required here or in the config)");
    sub->add_option("--workers", f.workers, "parallel workers")->check(CLI::PositiveNumber);
    sub->add_option("--dataset", f.dataset, "dataset JSONL (overrides paths.dataset)");
  };

  auto* gen = app.add_subcommand("generate", "generate a synthetic chain dataset");
  common(gen);
  gen->add_option("--out", f.out, "dataset JSONL to write");

  auto* sel = app.add_subcommand("select", "build training prompts");
  common(sel);
  sel->add_option("--out", f.out, "prompt JSONL to write");
  sel->add_option("--strategy", f.strategy, "demonstration strategy")->check(CLI::IsMember({"random", "info", "coat"}));
  sel->add_option("--scorer", f.scorer, "likelihood scorer")
      ->check(CLI::IsMember({"uniform", "lookup", "local", "remote"}));
  sel->add_option("--endpoint", f.endpoint, "remote scorer URL");

  auto* tr = app.add_subcommand("train", "train the micro-LM on a prompt set");
  common(tr);
  tr->add_option("--prompts", f.prompts, "prompt JSONL (overrides paths.prompts)");
  tr->add_option("--out", f.out, "checkpoint to write");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint with concept and random demonstrations");
  common(ev);
  ev->add_option("--checkpoint", f.checkpoint, "checkpoint (overrides paths.checkpoint)");
  ev->add_option("--metric", f.metric, "metric")->check(CLI::IsMember({"rouge_l", "exact_match"}));
  ev->add_option("--out", f.out, "report directory");

  auto* cmp = app.add_subcommand("compare", "compare two report files task by task");
  cmp->add_option("--a", f.report_a, "reports.csv of system A")->check(CLI::ExistingFile);
  cmp->add_option("--b", f.report_b, "reports.csv of system B")->check(CLI::ExistingFile);
  cmp->add_option("--out", f.out, "write the comparison table here too");

  auto* sc = app.add_subcommand("score", "print target-token likelihoods for one prompt");
  common(sc);
  sc->add_option("--scorer", f.scorer, "likelihood scorer")
      ->check(CLI::IsMember({"uniform", "lookup", "local", "remote"}));
  sc->add_option("--endpoint", f.endpoint, "remote scorer URL");
  sc->add_option("--prompt", f.prompt, "prompt text");
  sc->add_option("--target", f.target, "target text");
  sc->add_flag("--health", f.health, "query the remote backend's health endpoint instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) return RunGenerate(f);
    if (*sel) return RunSelect(f);
    if (*tr) return RunTrain(f);
    if (*ev) return RunEval(f);
    if (*cmp) return RunCompare(f);
    if (*sc) return RunScore(f);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const coat::Error& e) {
    const bool usage = e.code() == coat::ErrorCode::kConfigInvalid || e.code() == coat::ErrorCode::kStyleInvalid;
    std::cerr << (usage ? "usage error: " : "error: ") << e.what() << "\n";
    return usage ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
