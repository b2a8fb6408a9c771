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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "coat/dataset.hpp"
#include "coat/error.hpp"
#include "coat/promptfmt.hpp"
#include "coat/rng.hpp"

namespace coat::evalharness {

enum class DemoMode { kRandomDemos, kConceptDemos };
enum class Perturbation { kNone, kNonsense, kFlipped };

inline std::string_view DemoModeName(DemoMode m) { return m == DemoMode::kRandomDemos ? "random" : "concept"; }

inline std::string_view PerturbationName(Perturbation p) {
  switch (p) {
    case Perturbation::kNone: return "none";
    case Perturbation::kNonsense: return "nonsense";
    case Perturbation::kFlipped: return "flipped";
  }
  return "?";
}

inline std::optional<Perturbation> ParsePerturbation(std::string_view s) {
  if (s == "none") return Perturbation::kNone;
  if (s == "nonsense") return Perturbation::kNonsense;
  if (s == "flipped") return Perturbation::kFlipped;
  return std::nullopt;
}

// One evaluation prompt before serialization. `label_space` lists the
// admissible labels (after any perturbation).
struct EvalInstance {
  std::string id;
  std::string concept_key;
  std::vector<Demo> demos;
  std::string x_pred;
  std::string gold;
  std::vector<std::string> label_space;
  DemoMode mode = DemoMode::kRandomDemos;
  Perturbation perturb = Perturbation::kNone;
};

struct InstanceSet {
  std::vector<EvalInstance> instances;
  std::vector<std::string> skipped;  // ids lacking enough demonstration peers
};

// Distinct gold labels of a dataset, sorted.
inline std::vector<std::string> LabelSet(const Dataset& data) {
  std::set<std::string> labels;
  for (const auto& s : data) labels.insert(s.answer);
  return {labels.begin(), labels.end()};
}

// Evaluation prompts with k demonstrations per sample, drawn uniformly from
// `pool` (self excluded): from the whole pool for random demos, from the
// sample's concept peers for concept demos. The draw depends only on the
// seed and the sample position, so every predictor sees identical prompts.
inline InstanceSet BuildEvalInstances(const Dataset& evalset, const Dataset& pool, DemoMode mode, std::size_t k,
                                      std::uint64_t seed) {
  if (evalset.empty()) Fail(ErrorCode::kEmptyEvalSet, "evaluation set is empty");
  std::map<std::string, std::vector<std::size_t>> by_concept;
  for (std::size_t i = 0; i < pool.size(); ++i) by_concept[pool[i].concept_key].push_back(i);
  std::vector<std::size_t> everyone(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) everyone[i] = i;
  const auto labels = LabelSet(evalset);

  InstanceSet out;
  for (std::size_t i = 0; i < evalset.size(); ++i) {
    const QASample& s = evalset[i];
    const auto& source = mode == DemoMode::kConceptDemos ? by_concept[s.concept_key] : everyone;
    std::vector<std::size_t> peers;
    for (std::size_t j : source)
      if (pool[j].id != s.id) peers.push_back(j);
    if (peers.size() < k) {
      out.skipped.push_back(s.id);
      continue;
    }
    Rng rng = DeriveRng(seed, {4, static_cast<std::uint64_t>(mode), i});
    EvalInstance inst;
    inst.id = s.id;
    inst.concept_key = s.concept_key;
    inst.mode = mode;
    for (std::size_t j : SampleWithoutReplacement(std::move(peers), k, rng))
      inst.demos.push_back({SampleInput(pool[j]), pool[j].answer, pool[j].id});
    inst.x_pred = SampleInput(s);
    inst.gold = s.answer;
    inst.label_space = labels;
    out.instances.push_back(std::move(inst));
  }
  return out;
}

inline InstanceSet BuildEvalInstances(const Dataset& evalset, DemoMode mode, std::size_t k, std::uint64_t seed) {
  return BuildEvalInstances(evalset, evalset, mode, k, seed);
}

inline const std::vector<std::string>& NonsenseVocabulary() {
  static const std::vector<std::string> kWords{"foo",   "bar",  "baz",   "qux",    "quux",   "corge", "grault",
                                               "garply", "waldo", "fred", "plugh",  "xyzzy",  "thud",  "wibble",
                                               "wobble", "wubble", "flob", "zot",   "blep",   "snork"};
  return kWords;
}

inline constexpr std::size_t kMaxLabelSpace = 20;

// Applies one random label bijection per instance to its demonstration
// labels, gold and label space. NONSENSE maps onto the first |labels| entries
// of the nonsense vocabulary; FLIPPED draws a derangement of the labels.
inline std::vector<EvalInstance> PerturbLabels(std::vector<EvalInstance> instances, Perturbation mode,
                                               std::uint64_t seed) {
  if (mode == Perturbation::kNone) return instances;
  std::set<std::string> label_set;
  for (const auto& inst : instances) {
    label_set.insert(inst.gold);
    for (const auto& d : inst.demos) label_set.insert(d.y);
  }
  const std::vector<std::string> labels(label_set.begin(), label_set.end());
  if (labels.size() > kMaxLabelSpace)
    Fail(ErrorCode::kLabelSpaceTooLarge,
         std::to_string(labels.size()) + " distinct labels exceed " + std::to_string(kMaxLabelSpace));
  if (mode == Perturbation::kFlipped && labels.size() < 2)
    Fail(ErrorCode::kNoDerangement, "a single label cannot be flipped");

  for (std::size_t n = 0; n < instances.size(); ++n) {
    Rng rng = DeriveRng(seed, {5, n});
    std::vector<std::string> image;
    if (mode == Perturbation::kNonsense) {
      image.assign(NonsenseVocabulary().begin(),
                   NonsenseVocabulary().begin() + static_cast<std::ptrdiff_t>(labels.size()));
      std::shuffle(image.begin(), image.end(), rng);
    } else {
      image = labels;
      bool fixed_point = true;
      while (fixed_point) {
        std::shuffle(image.begin(), image.end(), rng);
        fixed_point = false;
        for (std::size_t i = 0; i < labels.size(); ++i) fixed_point |= image[i] == labels[i];
      }
    }
    std::map<std::string, std::string> mapping;
    for (std::size_t i = 0; i < labels.size(); ++i) mapping[labels[i]] = image[i];
    auto& inst = instances[n];
    for (auto& d : inst.demos) d.y = mapping.at(d.y);
    inst.gold = mapping.at(inst.gold);
    std::vector<std::string> space;
    for (const auto& l : inst.label_space) {
      auto it = mapping.find(l);
      space.push_back(it == mapping.end() ? l : it->second);
    }
    std::sort(space.begin(), space.end());
    inst.label_space = std::move(space);
    inst.perturb = mode;
  }
  return instances;
}

}  // namespace coat::evalharness
