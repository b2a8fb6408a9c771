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

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "coat/dataset.hpp"
#include "coat/error.hpp"
#include "coat/evalharness/bootstrap.hpp"
#include "coat/evalharness/instances.hpp"
#include "coat/evalharness/metrics.hpp"
#include "coat/parallel.hpp"
#include "coat/promptfmt.hpp"

namespace coat::evalharness {

// Maps an evaluation instance and its serialized prompt to an output text.
using Predictor = std::function<std::string(const EvalInstance& instance, const std::string& prompt)>;

struct Prediction {
  std::string id;
  std::string prompt;
  std::string gold;
  std::string output;
  DemoMode demo_mode = DemoMode::kRandomDemos;
  Perturbation perturb = Perturbation::kNone;
  double score = 0.0;

  OrderedJson to_json() const {
    OrderedJson j;
    j["id"] = id;
    j["prompt"] = prompt;
    j["gold"] = gold;
    j["output"] = output;
    j["demo_mode"] = DemoModeName(demo_mode);
    j["perturb"] = PerturbationName(perturb);
    j["score"] = score;
    return j;
  }
};

struct EvalReport {
  std::string task;
  std::string metric;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n = 0;
  std::string config_digest;
};

struct EvalConfig {
  std::size_t k = 3;
  Metric metric = Metric::kExactMatch;
  std::size_t population = 100;
  std::size_t repeats = 200;
  double level = 0.95;
  Perturbation perturb = Perturbation::kNone;
  promptfmt::PromptStyle style;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string task = "eval";
  std::string config_digest;
};

struct EvalResult {
  EvalReport report;
  std::vector<Prediction> predictions;
  std::vector<std::string> skipped;
};

// Scores prebuilt instances with a predictor and bootstraps the mean.
inline EvalResult EvaluateInstances(const Predictor& predictor, const std::vector<EvalInstance>& instances,
                                    const EvalConfig& cfg) {
  if (instances.empty()) Fail(ErrorCode::kEmptyEvalSet, "no evaluable instances");
  EvalResult out;
  out.predictions.resize(instances.size());
  ParallelFor(instances.size(), cfg.workers, [&](std::size_t i) {
    const auto& inst = instances[i];
    Prediction& p = out.predictions[i];
    p.id = inst.id;
    p.prompt = promptfmt::Serialize(inst.demos, inst.x_pred, cfg.style);
    p.gold = inst.gold;
    p.output = predictor(inst, p.prompt);
    p.demo_mode = inst.mode;
    p.perturb = inst.perturb;
    p.score = Score(cfg.metric, p.output, p.gold);
  });
  std::vector<double> scores;
  for (const auto& p : out.predictions) scores.push_back(p.score);
  const auto boot = BootstrapCi(scores, {cfg.population, cfg.repeats, cfg.level, cfg.seed, cfg.workers});
  out.report = {cfg.task, std::string(MetricName(cfg.metric)), boot.mean, boot.ci_lo, boot.ci_hi, scores.size(),
                cfg.config_digest};
  return out;
}

// Builds k-demo prompts for one demo mode (optionally perturbed), collects
// predictions and reports the bootstrapped metric.
inline EvalResult RunEval(const Predictor& predictor, const Dataset& evalset, DemoMode mode, const EvalConfig& cfg) {
  InstanceSet set = BuildEvalInstances(evalset, mode, cfg.k, cfg.seed);
  auto instances = PerturbLabels(std::move(set.instances), cfg.perturb, cfg.seed);
  EvalResult out = EvaluateInstances(predictor, instances, cfg);
  out.skipped = std::move(set.skipped);
  return out;
}

struct ConceptGain {
  double gain = 0.0;
  double score_concept = 0.0;
  double score_random = 0.0;
  bool absolute = false;  // score_random was 0: gain is the plain difference
  EvalResult concept_result;
  EvalResult random_result;
};

inline ConceptGain RelativeGain(double score_concept, double score_random) {
  ConceptGain g;
  g.score_concept = score_concept;
  g.score_random = score_random;
  if (score_random == 0.0) {
    g.absolute = true;
    g.gain = score_concept - score_random;
  } else {
    g.gain = (score_concept - score_random) / score_random;
  }
  return g;
}

// Relative change from random to concept-sharing demonstrations, measured on
// the samples that admit concept demonstrations.
inline ConceptGain ComputeConceptGain(const Predictor& predictor, const Dataset& evalset, const EvalConfig& cfg) {
  InstanceSet concept_set = BuildEvalInstances(evalset, DemoMode::kConceptDemos, cfg.k, cfg.seed);
  InstanceSet random_set = BuildEvalInstances(evalset, DemoMode::kRandomDemos, cfg.k, cfg.seed);
  std::set<std::string> usable;
  for (const auto& inst : concept_set.instances) usable.insert(inst.id);
  std::erase_if(random_set.instances, [&](const EvalInstance& inst) { return !usable.count(inst.id); });

  EvalConfig ccfg = cfg, rcfg = cfg;
  ccfg.task = cfg.task + "/concept";
  rcfg.task = cfg.task + "/random";
  auto concept_result =
      EvaluateInstances(predictor, PerturbLabels(std::move(concept_set.instances), cfg.perturb, cfg.seed), ccfg);
  auto random_result =
      EvaluateInstances(predictor, PerturbLabels(std::move(random_set.instances), cfg.perturb, cfg.seed), rcfg);
  concept_result.skipped = concept_set.skipped;
  ConceptGain g = RelativeGain(concept_result.report.mean, random_result.report.mean);
  g.concept_result = std::move(concept_result);
  g.random_result = std::move(random_result);
  return g;
}

struct ComparisonOutcome {
  std::size_t wins_a = 0;
  std::size_t wins_b = 0;
  std::size_t similar = 0;
  std::map<std::string, std::string> verdicts;  // task -> "a" | "b" | "similar"

  std::size_t total() const { return wins_a + wins_b + similar; }
};

// A task is a win for one side when its interval lies strictly above the
// other's; overlapping or touching intervals count as similar.
inline ComparisonOutcome CompareTasks(const std::vector<EvalReport>& a, const std::vector<EvalReport>& b) {
  std::map<std::string, const EvalReport*> ma, mb;
  for (const auto& r : a) ma[r.task] = &r;
  for (const auto& r : b) mb[r.task] = &r;
  if (ma.size() != a.size() || mb.size() != b.size()) Fail(ErrorCode::kTaskSetMismatch, "duplicate task ids");
  std::set<std::string> ka, kb;
  for (const auto& [t, _] : ma) ka.insert(t);
  for (const auto& [t, _] : mb) kb.insert(t);
  if (ka != kb) Fail(ErrorCode::kTaskSetMismatch, "report sets cover different tasks");
  ComparisonOutcome out;
  for (const auto& [task, ra] : ma) {
    const EvalReport* rb = mb.at(task);
    if (ra->metric != rb->metric) Fail(ErrorCode::kMetricMismatch, "task '" + task + "' uses different metrics");
    if (ra->ci_lo > rb->ci_hi) {
      ++out.wins_a;
      out.verdicts[task] = "a";
    } else if (rb->ci_lo > ra->ci_hi) {
      ++out.wins_b;
      out.verdicts[task] = "b";
    } else {
      ++out.similar;
      out.verdicts[task] = "similar";
    }
  }
  return out;
}

inline std::string FormatDouble(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

inline std::string ReportsToCsv(const std::vector<EvalReport>& reports) {
  std::string out = "task,metric,mean,ci_lo,ci_hi,n\n";
  for (const auto& r : reports)
    out += r.task + "," + r.metric + "," + FormatDouble(r.mean) + "," + FormatDouble(r.ci_lo) + "," +
           FormatDouble(r.ci_hi) + "," + std::to_string(r.n) + "\n";
  return out;
}

inline std::vector<EvalReport> ReportsFromCsv(std::string_view csv) {
  std::vector<EvalReport> out;
  bool header = true;
  for (const auto& line : text::Split(csv, "\n")) {
    if (text::Trim(line).empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("task,", 0) == 0) continue;
    }
    auto f = text::Split(line, ",");
    if (f.size() != 6) Fail(ErrorCode::kDatasetInvalid, "report row needs 6 fields: '" + line + "'");
    try {
      out.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), std::stod(f[4]),
                     static_cast<std::size_t>(std::stoull(f[5])), {}});
    } catch (const std::exception&) {
      Fail(ErrorCode::kDatasetInvalid, "bad number in report row '" + line + "'");
    }
  }
  return out;
}

inline std::string ReportsToMarkdown(const std::vector<EvalReport>& reports) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(4);
  ss << "| task | metric | mean | CI | n |\n|---|---|---|---|---|\n";
  for (const auto& r : reports)
    ss << "| " << r.task << " | " << r.metric << " | " << r.mean << " | [" << r.ci_lo << ", " << r.ci_hi << "] | "
       << r.n << " |\n";
  return ss.str();
}

inline std::string PredictionsToJsonl(const std::vector<Prediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) out += p.to_json().dump() + "\n";
  return out;
}

}  // namespace coat::evalharness
