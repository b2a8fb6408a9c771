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

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "coat/dataset.hpp"
#include "coat/error.hpp"
#include "coat/evalharness/harness.hpp"
#include "coat/microlm/model.hpp"
#include "coat/microlm/trainer.hpp"
#include "coat/promptfmt.hpp"
#include "coat/selection.hpp"
#include "coat/taskgen/generator.hpp"

namespace coat {

// Pipeline stages in dependency order. Each artifact's digest covers the
// config sections of its own stage and every upstream one.
enum class Stage { kGenerate, kSelect, kTrain, kEval };

inline std::string_view StageName(Stage s) {
  switch (s) {
    case Stage::kGenerate: return "generate";
    case Stage::kSelect: return "select";
    case Stage::kTrain: return "train";
    case Stage::kEval: return "eval";
  }
  return "?";
}

struct Paths {
  std::string dataset = "dataset.jsonl";
  std::string prompts = "prompts.jsonl";
  std::string checkpoint = "model.ckpt.json";
  std::string reports = "reports";
};

struct ScorerConfig {
  std::string kind;  // uniform | lookup | local | remote; empty when unset
  double p = 0.5;
  std::string table;       // lookup table JSON path
  std::string checkpoint;  // local: checkpoint path; empty = freshly initialized model
  std::string endpoint;
  int timeout_ms = 30000;
  int retries = 2;
  int pool_size = 4;
};

struct EvalSection {
  std::size_t k = 3;
  std::string metric = "exact_match";
  std::size_t population = 100;
  std::size_t repeats = 200;
  double level = 0.95;
  std::string perturb = "none";
  std::size_t max_decode = 8;
  std::string split = "eval";
  std::string task = "heldout";
};

struct RunConfig {
  Json raw;  // config document after flag overrides
  std::optional<std::uint64_t> seed;
  Paths paths;
  taskgen::DatasetConfig generate;
  selection::SelectionConfig select;
  ScorerConfig scorer;
  microlm::ModelConfig model;
  microlm::TrainConfig train;
  double validation_fraction = 0.1;
  EvalSection eval;
  promptfmt::PromptStyle style;
  unsigned workers = 1;

  std::uint64_t required_seed() const {
    if (!seed) Fail(ErrorCode::kConfigInvalid, "seed is required");
    return *seed;
  }
};

namespace detail {

template <typename T>
void Read(const Json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

inline taskgen::IntRange ReadRange(const Json& j, const char* key, taskgen::IntRange def) {
  if (!j.contains(key)) return def;
  const auto v = j[key].get<std::vector<std::int64_t>>();
  if (v.size() != 2) Fail(ErrorCode::kConfigInvalid, std::string(key) + " must be [lo, hi]");
  return {v[0], v[1]};
}

inline const Json& Section(const Json& root, const char* name) {
  static const Json kEmpty = Json::object();
  return root.contains(name) && root[name].is_object() ? root[name] : kEmpty;
}

}  // namespace detail

inline RunConfig ParseRunConfig(const Json& root) {
  using detail::Read;
  RunConfig c;
  c.raw = root;
  try {
    if (root.contains("seed") && !root["seed"].is_null()) c.seed = root["seed"].get<std::uint64_t>();
    Read(root, "workers", c.workers);

    const Json& paths = detail::Section(root, "paths");
    Read(paths, "dataset", c.paths.dataset);
    Read(paths, "prompts", c.paths.prompts);
    Read(paths, "checkpoint", c.paths.checkpoint);
    Read(paths, "reports", c.paths.reports);

    if (root.contains("style")) c.style = promptfmt::StyleFromJson(root["style"]);

    const Json& g = detail::Section(root, "generate");
    Read(g, "n_chains", c.generate.n_chains);
    Read(g, "samples_per_chain", c.generate.samples_per_chain);
    Read(g, "heldout_chain_fraction", c.generate.heldout_chain_fraction);
    c.generate.value_range = detail::ReadRange(g, "value_range", c.generate.value_range);
    Read(g, "entity_vocabulary", c.generate.entity_vocabulary);
    Read(g, "attributes", c.generate.attributes);
    c.generate.target_records = detail::ReadRange(g, "target_records", c.generate.target_records);
    c.generate.distractor_entities = detail::ReadRange(g, "distractor_entities", c.generate.distractor_entities);
    c.generate.distractor_records = detail::ReadRange(g, "distractor_records", c.generate.distractor_records);
    Read(g, "max_chain_length", c.generate.max_chain_length);
    if (g.contains("templates")) c.generate.templates = taskgen::TemplateRegistry::FromJson(g["templates"]);
    if (g.contains("templates_path") && g["templates_path"].is_string())
      c.generate.templates =
          taskgen::TemplateRegistry::FromJson(Json::parse(ReadFile(g["templates_path"].get<std::string>())));

    const Json& s = detail::Section(root, "select");
    if (s.contains("strategy")) {
      auto st = ParseStrategy(s["strategy"].get<std::string>());
      if (!st) Fail(ErrorCode::kConfigInvalid, "select.strategy must be random|info|coat");
      c.select.strategy = *st;
    }
    Read(s, "candidates", c.select.candidates);
    if (s.contains("k_range")) {
      auto r = detail::ReadRange(s, "k_range", {2, 8});
      if (r.lo < 1) Fail(ErrorCode::kConfigInvalid, "select.k_range must start at 1 or more");
      c.select.k_min = static_cast<std::size_t>(r.lo);
      c.select.k_max = static_cast<std::size_t>(r.hi);
    }
    if (s.contains("likelihood")) {
      const auto agg = s["likelihood"].get<std::string>();
      if (agg == "arithmetic") {
        c.select.aggregation = selection::Aggregation::kArithmetic;
      } else if (agg == "geometric") {
        c.select.aggregation = selection::Aggregation::kGeometric;
      } else {
        Fail(ErrorCode::kConfigInvalid, "select.likelihood must be arithmetic|geometric");
      }
    }
    c.select.style = c.style;

    const Json& sc = detail::Section(root, "scorer");
    Read(sc, "kind", c.scorer.kind);
    Read(sc, "p", c.scorer.p);
    Read(sc, "table", c.scorer.table);
    Read(sc, "checkpoint", c.scorer.checkpoint);
    Read(sc, "endpoint", c.scorer.endpoint);
    Read(sc, "timeout_ms", c.scorer.timeout_ms);
    Read(sc, "retries", c.scorer.retries);
    Read(sc, "pool_size", c.scorer.pool_size);

    const Json& m = detail::Section(root, "model");
    Read(m, "d_model", c.model.d_model);
    Read(m, "n_layers", c.model.n_layers);
    Read(m, "n_heads", c.model.n_heads);
    Read(m, "context_len", c.model.context_len);
    c.model.d_ff = 4 * c.model.d_model;
    Read(m, "d_ff", c.model.d_ff);
    Read(m, "init_std", c.model.init_std);

    const Json& t = detail::Section(root, "train");
    Read(t, "learning_rate", c.train.learning_rate);
    Read(t, "batch_size", c.train.batch_size);
    Read(t, "patience", c.train.patience);
    Read(t, "max_steps", c.train.max_steps);
    Read(t, "eval_every", c.train.eval_every);
    Read(t, "grad_clip", c.train.grad_clip);
    Read(t, "linear_decay", c.train.linear_decay);
    Read(t, "append_eos", c.train.append_eos);
    Read(t, "validation_fraction", c.validation_fraction);

    const Json& e = detail::Section(root, "eval");
    Read(e, "k", c.eval.k);
    Read(e, "metric", c.eval.metric);
    Read(e, "population", c.eval.population);
    Read(e, "repeats", c.eval.repeats);
    Read(e, "level", c.eval.level);
    Read(e, "perturb", c.eval.perturb);
    Read(e, "max_decode", c.eval.max_decode);
    Read(e, "split", c.eval.split);
    Read(e, "task", c.eval.task);
    if (!evalharness::ParseMetric(c.eval.metric)) Fail(ErrorCode::kConfigInvalid, "eval.metric must be rouge_l|exact_match");
    if (!evalharness::ParsePerturbation(c.eval.perturb))
      Fail(ErrorCode::kConfigInvalid, "eval.perturb must be none|nonsense|flipped");
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kConfigInvalid, e.what());
  }

  if (c.seed) {
    const std::uint64_t seed = *c.seed;
    c.generate.seed = seed;
    c.select.seed = seed;
    c.model.seed = seed;
    if (const Json& m = detail::Section(root, "model"); m.contains("seed")) c.model.seed = m["seed"].get<std::uint64_t>();
    c.train.seed = seed;
  }
  c.select.workers = c.workers;
  return c;
}

// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string Fnv1aHex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Digest over the seed and the config sections that determine a stage's
// output. Object keys are sorted by the JSON library, so key order in the
// config file does not matter.
inline std::string StageDigest(const RunConfig& cfg, Stage stage) {
  Json basis = Json::object();
  basis["seed"] = cfg.raw.value("seed", Json());
  auto take = [&](const char* name) { basis[name] = cfg.raw.value(name, Json()); };
  take("generate");
  if (stage >= Stage::kSelect) {
    take("select");
    take("scorer");
    take("style");
  }
  if (stage >= Stage::kTrain) {
    take("model");
    take("train");
  }
  if (stage >= Stage::kEval) take("eval");
  return Fnv1aHex(basis.dump());
}

}  // namespace coat
