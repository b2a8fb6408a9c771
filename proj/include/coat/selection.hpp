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

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "coat/dataset.hpp"
#include "coat/error.hpp"
#include "coat/parallel.hpp"
#include "coat/promptfmt.hpp"
#include "coat/rng.hpp"
#include "coat/scorer.hpp"

namespace coat::selection {

using ConceptExtractor = std::function<std::string(const QASample&)>;

// concept key -> ascending sample ids. Immutable once built.
class ConceptIndex {
 public:
  const std::vector<std::string>& members(std::string_view concept_key) const {
    static const std::vector<std::string> kEmpty;
    auto it = members_.find(std::string(concept_key));
    return it == members_.end() ? kEmpty : it->second;
  }

  bool contains(std::string_view concept_key) const { return members_.count(std::string(concept_key)) > 0; }
  const std::string& concept_of(std::string_view id) const { return concept_of_.at(std::string(id)); }
  const QASample& sample(std::string_view id) const { return *samples_.at(std::string(id)); }
  const std::map<std::string, std::vector<std::string>>& groups() const { return members_; }
  std::size_t size() const { return concept_of_.size(); }

 private:
  friend ConceptIndex IndexByConcept(const Dataset&, const ConceptExtractor&);
  std::map<std::string, std::vector<std::string>> members_;
  std::unordered_map<std::string, std::string> concept_of_;
  std::unordered_map<std::string, const QASample*> samples_;
};

// Groups samples by concept. The index refers into `data`, which must
// outlive it. A null extractor uses the stored concept field.
inline ConceptIndex IndexByConcept(const Dataset& data, const ConceptExtractor& extractor = nullptr) {
  if (data.empty()) Fail(ErrorCode::kDatasetInvalid, "cannot index an empty dataset");
  ConceptIndex index;
  for (const auto& s : data) {
    std::string key = extractor ? extractor(s) : s.concept_key;
    if (!index.samples_.emplace(s.id, &s).second) Fail(ErrorCode::kDatasetInvalid, "duplicate id '" + s.id + "'");
    index.concept_of_[s.id] = key;
    index.members_[key].push_back(s.id);
  }
  for (auto& [_, ids] : index.members_) std::sort(ids.begin(), ids.end());
  return index;
}

// Ids sharing the sample's concept, self excluded, subsampled to at most m
// (seeded) and returned in ascending order.
inline std::vector<std::string> InformativeCandidates(const ConceptIndex& index, const QASample& sample,
                                                      std::size_t m, Rng& rng) {
  const std::string& concept_key = index.contains(sample.id) ? index.concept_of(sample.id) : sample.concept_key;
  std::vector<std::string> pool;
  for (const auto& id : index.members(concept_key))
    if (id != sample.id) pool.push_back(id);
  if (pool.empty())
    Fail(ErrorCode::kConceptUnderpopulated, "concept '" + concept_key + "' has no members besides '" + sample.id + "'");
  if (pool.size() > m) {
    pool = SampleWithoutReplacement(std::move(pool), m, rng);
    std::sort(pool.begin(), pool.end());
  }
  return pool;
}

enum class Aggregation { kArithmetic, kGeometric };

inline double LikelihoodOfTarget(const Scorer& scorer, const std::vector<Demo>& demos, std::string_view x_pred,
                                 std::string_view y_pred, const promptfmt::PromptStyle& style,
                                 Aggregation agg = Aggregation::kArithmetic) {
  const std::string prompt = promptfmt::Serialize(demos, x_pred, style);
  TokenLikelihoods t;
  try {
    t = scorer.Score(prompt, y_pred);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    Fail(ErrorCode::kScorerFailure, e.what());
  }
  return agg == Aggregation::kArithmetic ? t.mean_prob : t.geometric_mean();
}

inline Demo DemoFromSample(const QASample& s) { return {SampleInput(s), s.answer, s.id}; }

// Greedy non-triviality selection: at each step append the candidate whose
// inclusion (after the demos picked so far) gives the lowest target
// likelihood; ties go to the smallest id. The pool is fixed across steps.
inline std::vector<Demo> NontrivialSelect(const std::vector<Demo>& candidates, const QASample& target,
                                          std::size_t k, const Scorer& scorer,
                                          const promptfmt::PromptStyle& style,
                                          Aggregation agg = Aggregation::kArithmetic) {
  if (k < 1) Fail(ErrorCode::kConfigInvalid, "k must be at least 1");
  std::vector<Demo> remaining;
  for (const auto& c : candidates)
    if (c.id != target.id) remaining.push_back(c);
  const std::string x_pred = SampleInput(target);

  std::vector<Demo> chosen;
  while (chosen.size() < k && !remaining.empty()) {
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<Demo> trial = chosen;
    trial.emplace_back();
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      trial.back() = remaining[i];
      const double score = LikelihoodOfTarget(scorer, trial, x_pred, target.answer, style, agg);
      if (score < best_score || (score == best_score && remaining[i].id < remaining[best].id)) {
        best = i;
        best_score = score;
      }
    }
    chosen.push_back(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return chosen;
}

// k demonstrations drawn uniformly without replacement from `pool`, the
// target excluded.
inline std::vector<Demo> RandomSelect(const Dataset& pool, const QASample& target, std::size_t k, Rng& rng) {
  std::vector<std::size_t> others;
  others.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool[i].id != target.id) others.push_back(i);
  if (others.size() < k)
    Fail(ErrorCode::kInsufficientSamples,
         "need " + std::to_string(k) + " samples besides '" + target.id + "', have " + std::to_string(others.size()));
  std::vector<Demo> demos;
  for (std::size_t i : SampleWithoutReplacement(std::move(others), k, rng)) demos.push_back(DemoFromSample(pool[i]));
  return demos;
}

struct SelectionConfig {
  DemoStrategy strategy = DemoStrategy::kCoat;
  std::size_t candidates = 20;
  std::size_t k_min = 2;
  std::size_t k_max = 8;
  Aggregation aggregation = Aggregation::kArithmetic;
  promptfmt::PromptStyle style;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct PromptSet {
  std::vector<PromptSpec> prompts;
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> reasons;

  nlohmann::json report() const {
    nlohmann::json r = nlohmann::json::object();
    for (const auto& [k, v] : reasons) r[k] = v;
    return {{"skipped", skipped}, {"reasons", r}, {"prompts", prompts.size()}};
  }
};

// One prompt per training-split sample. Demonstrations come from the
// training split only; samples whose concept has no other members are
// skipped and counted.
inline PromptSet BuildTrainingPrompts(const Dataset& data, const SelectionConfig& cfg, const Scorer* scorer,
                                      const ConceptExtractor& extractor = nullptr) {
  if (cfg.strategy == DemoStrategy::kCoat && scorer == nullptr)
    Fail(ErrorCode::kConfigInvalid, "coat strategy requires a scorer");
  if (cfg.k_min < 1 || cfg.k_min > cfg.k_max) Fail(ErrorCode::kConfigInvalid, "k range must satisfy 1 <= min <= max");
  if (cfg.candidates < 1) Fail(ErrorCode::kConfigInvalid, "candidate count must be positive");
  promptfmt::ValidateStyle(cfg.style);
  const Dataset train = FilterSplit(data, Split::kTrain);
  if (train.empty()) Fail(ErrorCode::kDatasetInvalid, "dataset has no training samples");
  const ConceptIndex index = IndexByConcept(train, extractor);

  std::vector<std::optional<PromptSpec>> slots(train.size());
  std::vector<std::string> failures(train.size());
  ParallelFor(train.size(), cfg.workers, [&](std::size_t i) {
    const QASample& s = train[i];
    Rng rng = DeriveRng(cfg.seed, {2, i});
    const auto k = static_cast<std::size_t>(
        UniformInt(rng, static_cast<std::int64_t>(cfg.k_min), static_cast<std::int64_t>(cfg.k_max)));
    PromptSpec spec;
    spec.id = s.id;
    spec.x_pred = SampleInput(s);
    spec.y_pred = s.answer;
    spec.strategy = cfg.strategy;
    spec.concept_key = index.concept_of(s.id);
    try {
      if (cfg.strategy == DemoStrategy::kRandom) {
        spec.demos = RandomSelect(train, s, k, rng);
      } else {
        std::vector<Demo> cands;
        for (const auto& id : InformativeCandidates(index, s, cfg.candidates, rng))
          cands.push_back(DemoFromSample(index.sample(id)));
        if (cfg.strategy == DemoStrategy::kInfoOnly) {
          spec.demos = SampleWithoutReplacement(std::move(cands), k, rng);
        } else {
          spec.demos = NontrivialSelect(cands, s, k, *scorer, cfg.style, cfg.aggregation);
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kConceptUnderpopulated && e.code() != ErrorCode::kInsufficientSamples) throw;
      failures[i] = std::string(ErrorName(e.code()));
      return;
    }
    slots[i] = std::move(spec);
  });

  PromptSet out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) {
      out.prompts.push_back(std::move(*slots[i]));
    } else {
      ++out.skipped;
      ++out.reasons[failures[i]];
    }
  }
  return out;
}

inline OrderedJson PromptToJson(const PromptSpec& p) {
  OrderedJson j;
  j["id"] = p.id;
  j["strategy"] = StrategyName(p.strategy);
  j["k"] = p.k();
  j["concept"] = p.concept_key;
  OrderedJson demos = OrderedJson::array();
  for (const auto& d : p.demos) {
    OrderedJson dj;
    dj["x"] = d.x;
    dj["y"] = d.y;
    demos.push_back(std::move(dj));
  }
  j["demos"] = std::move(demos);
  j["x_pred"] = p.x_pred;
  j["y_pred"] = p.y_pred;
  return j;
}

inline PromptSpec PromptFromJson(const Json& j) {
  PromptSpec p;
  try {
    p.id = j.at("id").get<std::string>();
    auto strategy = ParseStrategy(j.at("strategy").get<std::string>());
    if (!strategy) Fail(ErrorCode::kDatasetInvalid, "unknown strategy in prompt '" + p.id + "'");
    p.strategy = *strategy;
    p.concept_key = j.value("concept", std::string());
    for (const auto& d : j.at("demos")) p.demos.push_back({d.at("x").get<std::string>(), d.at("y").get<std::string>(), {}});
    p.x_pred = j.at("x_pred").get<std::string>();
    p.y_pred = j.at("y_pred").get<std::string>();
    if (j.at("k").get<std::size_t>() != p.demos.size())
      Fail(ErrorCode::kDatasetInvalid, "k does not match demo count in prompt '" + p.id + "'");
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kDatasetInvalid, e.what());
  }
  return p;
}

inline std::string WritePromptsJsonl(const std::vector<PromptSpec>& prompts) {
  std::string out;
  for (const auto& p : prompts) out += PromptToJson(p).dump() + "\n";
  return out;
}

inline std::vector<PromptSpec> ReadPromptsJsonl(std::string_view content) {
  std::vector<PromptSpec> out;
  for (const auto& line : text::Split(content, "\n")) {
    if (text::Trim(line).empty()) continue;
    try {
      out.push_back(PromptFromJson(Json::parse(line)));
    } catch (const Json::exception& e) {
      Fail(ErrorCode::kDatasetInvalid, e.what());
    }
  }
  return out;
}

}  // namespace coat::selection
