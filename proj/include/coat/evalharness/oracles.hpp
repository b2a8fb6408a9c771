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
#include <functional>
#include <map>
#include <set>
#include <string>

#include "coat/evalharness/harness.hpp"

namespace coat::evalharness {

// Reference predictors with analytically known scores, used to self-test the
// robustness harness. `semantic_label` recovers an input's original label.
using LabelFunction = std::function<std::string(const std::string& x)>;

// Reads the label mapping off the demonstrations and applies it to the
// predicted input. An original label absent from the demos maps to the one
// admissible label the demos leave unused, when that is unique.
inline Predictor FunctionalOracle(LabelFunction semantic_label) {
  return [f = std::move(semantic_label)](const EvalInstance& inst, const std::string&) -> std::string {
    std::map<std::string, std::string> mapping;
    std::set<std::string> used;
    for (const auto& d : inst.demos) {
      mapping[f(d.x)] = d.y;
      used.insert(d.y);
    }
    const std::string original = f(inst.x_pred);
    if (auto it = mapping.find(original); it != mapping.end()) return it->second;
    std::vector<std::string> unused;
    for (const auto& l : inst.label_space)
      if (!used.count(l)) unused.push_back(l);
    return unused.size() == 1 ? unused.front() : std::string();
  };
}

// Ignores the demonstrations and answers with the original-semantics label.
inline Predictor SemanticOracle(LabelFunction semantic_label) {
  return [f = std::move(semantic_label)](const EvalInstance& inst, const std::string&) { return f(inst.x_pred); };
}

// Copies the label of the demonstration closest to the predicted input.
inline Predictor CopyLastDemo() {
  return [](const EvalInstance& inst, const std::string&) {
    return inst.demos.empty() ? std::string() : inst.demos.back().y;
  };
}

}  // namespace coat::evalharness
