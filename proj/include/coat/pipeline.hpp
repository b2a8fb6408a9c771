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

#pragma once

#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coat/config.hpp"
#include "coat/dataset.hpp"
#include "coat/error.hpp"
#include "coat/evalharness/harness.hpp"
#include "coat/microlm/checkpoint.hpp"
#include "coat/microlm/inference.hpp"
#include "coat/microlm/trainer.hpp"
#include "coat/remote_scorer.hpp"
#include "coat/scorer.hpp"
#include "coat/selection.hpp"
#include "coat/taskgen/generator.hpp"

namespace coat::pipeline {

inline std::string MetaPath(const std::string& artifact) { return artifact + ".meta.json"; }

inline void WriteMeta(const std::string& artifact, Stage stage, const std::string& digest) {
  OrderedJson j;
  j["stage"] = StageName(stage);
  j["config_digest"] = digest;
  WriteFile(MetaPath(artifact), j.dump(2) + "\n");
}

// Rejects an upstream artifact produced under a different config. Artifacts
// without a sidecar (user-supplied data) are accepted.
inline void CheckMeta(const std::string& artifact, const std::string& expected) {
  if (!std::filesystem::exists(MetaPath(artifact))) return;
  Json j;
  try {
    j = Json::parse(ReadFile(MetaPath(artifact)));
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kDigestMismatch, "unreadable sidecar for '" + artifact + "': " + e.what());
  }
  const std::string got = j.value("config_digest", std::string());
  if (got != expected)
    Fail(ErrorCode::kDigestMismatch,
         "'" + artifact + "' was produced with config digest " + got + ", supplied config gives " + expected);
}

// Vocabulary source for models: training-split inputs and answers plus the
// prompt tags.
inline microlm::Tokenizer BuildSubjectTokenizer(const Dataset& data, const promptfmt::PromptStyle& style) {
  std::vector<std::string> corpus{style.input_tag, style.pred_tag};
  if (style.kind == promptfmt::StyleKind::kInstructed) corpus.push_back(style.instruction);
  for (const auto& s : data) {
    if (s.split != Split::kTrain) continue;
    corpus.push_back(SampleInput(s));
    corpus.push_back(s.answer);
  }
  return microlm::Tokenizer::Build(corpus);
}

// The subject model before any update: fixed by the model config and seed.
inline microlm::Model InitialModel(const RunConfig& cfg, const Dataset& data) {
  return microlm::Model(cfg.model, BuildSubjectTokenizer(data, cfg.style));
}

struct ScorerHandle {
  std::unique_ptr<microlm::Model> model;
  std::unique_ptr<Scorer> scorer;
};

inline ScorerHandle MakeScorer(const RunConfig& cfg, const Dataset* data) {
  ScorerHandle h;
  const auto& sc = cfg.scorer;
  if (sc.kind == "uniform") {
    h.scorer = std::make_unique<UniformScorer>(sc.p);
  } else if (sc.kind == "lookup") {
    if (sc.table.empty()) Fail(ErrorCode::kConfigInvalid, "lookup scorer needs scorer.table");
    h.scorer = std::make_unique<LookupScorer>(LookupScorer::FromJson(Json::parse(ReadFile(sc.table))));
  } else if (sc.kind == "local") {
    if (!sc.checkpoint.empty()) {
      h.model = std::make_unique<microlm::Model>(microlm::LoadCheckpoint(sc.checkpoint));
    } else {
      if (!data) Fail(ErrorCode::kConfigInvalid, "local scorer without a checkpoint needs a dataset");
      h.model = std::make_unique<microlm::Model>(InitialModel(cfg, *data));
    }
    h.scorer = std::make_unique<microlm::LocalModelScorer>(*h.model);
  } else if (sc.kind == "remote") {
    RemoteScorerConfig rc;
    rc.endpoint = sc.endpoint;
    rc.timeout_ms = sc.timeout_ms;
    rc.retries = sc.retries;
    rc.pool_size = sc.pool_size;
    rc.bearer_token = RemoteScorerConfig::TokenFromEnv();
    h.scorer = std::make_unique<RemoteScorer>(rc);
  } else {
    Fail(ErrorCode::kConfigInvalid, "scorer.kind must be uniform|lookup|local|remote, got '" + sc.kind + "'");
  }
  return h;
}

inline taskgen::GeneratedDataset Generate(const RunConfig& cfg, const std::string& out) {
  cfg.required_seed();
  auto gen = taskgen::GenerateDataset(cfg.generate);
  WriteFile(out, WriteDatasetJsonl(gen.dataset()));
  WriteMeta(out, Stage::kGenerate, StageDigest(cfg, Stage::kGenerate));
  return gen;
}

inline Dataset LoadDataset(const RunConfig& cfg) {
  CheckMeta(cfg.paths.dataset, StageDigest(cfg, Stage::kGenerate));
  return ReadDatasetJsonl(ReadFile(cfg.paths.dataset));
}

inline selection::PromptSet Select(const RunConfig& cfg, const std::string& out) {
  cfg.required_seed();
  const Dataset data = LoadDataset(cfg);
  ScorerHandle scorer;
  if (cfg.select.strategy == DemoStrategy::kCoat) scorer = MakeScorer(cfg, &data);
  auto set = selection::BuildTrainingPrompts(data, cfg.select, scorer.scorer.get());
  const std::string digest = StageDigest(cfg, Stage::kSelect);
  WriteFile(out, selection::WritePromptsJsonl(set.prompts));
  WriteMeta(out, Stage::kSelect, digest);
  auto report = set.report();
  report["config_digest"] = digest;
  WriteFile(out + ".report.json", report.dump(2) + "\n");
  return set;
}

// Deterministic train/validation split of a prompt set.
inline void SplitValidation(const std::vector<PromptSpec>& prompts, double fraction, std::uint64_t seed,
                            std::vector<PromptSpec>& train, std::vector<PromptSpec>& val) {
  std::vector<std::size_t> order(prompts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = DeriveRng(seed, {6});
  order = SampleWithoutReplacement(std::move(order), order.size(), rng);
  auto n_val = static_cast<std::size_t>(fraction * static_cast<double>(prompts.size()));
  if (n_val >= prompts.size()) n_val = prompts.size() - 1;
  std::vector<bool> is_val(prompts.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
  for (std::size_t i = 0; i < prompts.size(); ++i) (is_val[i] ? val : train).push_back(prompts[i]);
}

struct TrainOutcome {
  microlm::Model model;
  microlm::TrainResult result;
};

// Trains the subject model on a prompt set; validation prompts are split off
// for early stopping.
inline TrainOutcome TrainOnPrompts(const RunConfig& cfg, const Dataset& data, const std::vector<PromptSpec>& prompts) {
  if (prompts.empty()) Fail(ErrorCode::kConfigInvalid, "no prompts to train on");
  microlm::Model model = InitialModel(cfg, data);
  std::vector<PromptSpec> train, val;
  SplitValidation(prompts, cfg.validation_fraction, cfg.required_seed(), train, val);
  const auto train_ex = microlm::MakeExamples(model, train, cfg.style, cfg.train.append_eos);
  const auto val_ex = microlm::MakeExamples(model, val, cfg.style, cfg.train.append_eos);
  auto result = microlm::Train(model, train_ex, val_ex, cfg.train);
  return {std::move(model), std::move(result)};
}

inline TrainOutcome TrainStage(const RunConfig& cfg, const std::string& out) {
  cfg.required_seed();
  const Dataset data = LoadDataset(cfg);
  CheckMeta(cfg.paths.prompts, StageDigest(cfg, Stage::kSelect));
  const auto prompts = selection::ReadPromptsJsonl(ReadFile(cfg.paths.prompts));
  TrainOutcome outcome = TrainOnPrompts(cfg, data, prompts);
  const std::string digest = StageDigest(cfg, Stage::kTrain);
  microlm::SaveCheckpoint(outcome.model, out, digest);
  WriteMeta(out, Stage::kTrain, digest);
  WriteFile(out + ".loss.csv", outcome.result.csv());
  return outcome;
}

inline evalharness::EvalConfig MakeEvalConfig(const RunConfig& cfg) {
  evalharness::EvalConfig e;
  e.k = cfg.eval.k;
  e.metric = *evalharness::ParseMetric(cfg.eval.metric);
  e.population = cfg.eval.population;
  e.repeats = cfg.eval.repeats;
  e.level = cfg.eval.level;
  e.perturb = *evalharness::ParsePerturbation(cfg.eval.perturb);
  e.style = cfg.style;
  e.seed = cfg.required_seed();
  e.workers = cfg.workers;
  e.task = cfg.eval.task;
  e.config_digest = StageDigest(cfg, Stage::kEval);
  return e;
}

inline evalharness::Predictor ModelPredictor(const microlm::Model& model, std::size_t max_decode) {
  return [&model, max_decode](const evalharness::EvalInstance&, const std::string& prompt) {
    return microlm::GreedyDecode(model, prompt, max_decode, microlm::Tokenizer::kSep);
  };
}

inline Dataset EvalSplit(const RunConfig& cfg, const Dataset& data) {
  if (cfg.eval.split != "eval" && cfg.eval.split != "train")
    Fail(ErrorCode::kConfigInvalid, "eval.split must be eval|train");
  Dataset out = FilterSplit(data, cfg.eval.split == "eval" ? Split::kEval : Split::kTrain);
  if (out.empty()) Fail(ErrorCode::kEmptyEvalSet, "no samples in split '" + cfg.eval.split + "'");
  return out;
}

inline std::string GainMarkdown(const evalharness::ConceptGain& g) {
  std::ostringstream ss;
  ss.precision(6);
  ss << "\nconcept gain: " << g.gain << (g.absolute ? " (absolute difference; random-demo score is 0)" : " (relative)")
     << "\n";
  return ss.str();
}

inline evalharness::ConceptGain EvalStage(const RunConfig& cfg, const std::string& out_dir) {
  cfg.required_seed();
  const Dataset data = LoadDataset(cfg);
  std::string digest;
  microlm::Model model = microlm::LoadCheckpoint(cfg.paths.checkpoint, &digest);
  if (!digest.empty() && digest != StageDigest(cfg, Stage::kTrain))
    Fail(ErrorCode::kDigestMismatch, "checkpoint digest " + digest + " does not match the supplied config");
  const auto ecfg = MakeEvalConfig(cfg);
  auto gain = evalharness::ComputeConceptGain(ModelPredictor(model, cfg.eval.max_decode), EvalSplit(cfg, data), ecfg);

  std::filesystem::create_directories(out_dir);
  const std::vector<evalharness::EvalReport> reports{gain.concept_result.report, gain.random_result.report};
  auto predictions = gain.concept_result.predictions;
  predictions.insert(predictions.end(), gain.random_result.predictions.begin(), gain.random_result.predictions.end());
  const std::filesystem::path dir(out_dir);
  WriteFile((dir / "predictions.jsonl").string(), evalharness::PredictionsToJsonl(predictions));
  WriteFile((dir / "reports.csv").string(), evalharness::ReportsToCsv(reports));
  WriteFile((dir / "summary.md").string(), evalharness::ReportsToMarkdown(reports) + GainMarkdown(gain));
  WriteMeta((dir / "reports.csv").string(), Stage::kEval, ecfg.config_digest);
  return gain;
}

}  // namespace coat::pipeline
