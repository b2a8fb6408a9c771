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

// Independent checks for the greedy non-triviality selection, shared by the
// unit tests and the acceptance binary.

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "coat/promptfmt.hpp"
#include "coat/scorer.hpp"

namespace oracle {

// Deterministic pseudo-random probabilities keyed on the full prompt text,
// quantized to a few levels so ties occur regularly.
inline coat::FunctionScorer HashScorer(std::uint64_t salt, int levels = 4) {
  return coat::FunctionScorer([salt, levels](std::string_view prompt, std::string_view target) {
    std::vector<double> probs;
    const std::uint64_t hp = std::hash<std::string_view>{}(prompt);
    for (const auto& tok : coat::text::SplitWhitespace(target)) {
      std::uint64_t h = (hp * 0xff51afd7ed558ccdull + std::hash<std::string>{}(tok)) ^ (salt * 0x9e3779b97f4a7c15ull);
      h ^= h >> 33;
      h *= 0xc4ceb9fe1a85ec53ull;
      h ^= h >> 29;
      probs.push_back(static_cast<double>(h % static_cast<std::uint64_t>(levels) + 1) / (levels + 1));
    }
    return probs;
  });
}

inline double MeanProb(const coat::Scorer& scorer, const std::vector<coat::Demo>& demos, const std::string& x,
                       const std::string& y, const coat::promptfmt::PromptStyle& style) {
  auto t = scorer.Score(coat::promptfmt::Serialize(demos, x, style), y);
  double s = 0;
  for (double p : t.probs) s += p;
  return s / static_cast<double>(t.probs.size());
}

// Empty string when `chosen` is exactly what exhaustive per-step argmin
// (ties to the smallest id) produces; otherwise a description of the
// first discrepancy.
inline std::string CheckGreedy(const std::vector<coat::Demo>& candidates, const std::string& target_id,
                               const std::string& x, const std::string& y, std::size_t k,
                               const std::vector<coat::Demo>& chosen, const coat::Scorer& scorer,
                               const coat::promptfmt::PromptStyle& style) {
  std::vector<coat::Demo> pool;
  for (const auto& c : candidates)
    if (c.id != target_id) pool.push_back(c);
  const std::size_t want = std::min(k, pool.size());
  if (chosen.size() != want) return "expected " + std::to_string(want) + " demos, got " + std::to_string(chosen.size());
  std::set<std::string> used;
  std::vector<coat::Demo> prefix;
  for (std::size_t t = 0; t < chosen.size(); ++t) {
    if (chosen[t].id == target_id) return "target used as its own demonstration";
    if (used.count(chosen[t].id)) return "demo '" + chosen[t].id + "' repeated";
    std::string best_id;
    double best = 2.0;
    for (const auto& c : pool) {
      if (used.count(c.id)) continue;
      auto trial = prefix;
      trial.push_back(c);
      const double v = MeanProb(scorer, trial, x, y, style);
      if (v < best || (v == best && c.id < best_id)) {
        best = v;
        best_id = c.id;
      }
    }
    if (chosen[t].id != best_id)
      return "step " + std::to_string(t) + ": chose '" + chosen[t].id + "', argmin is '" + best_id + "'";
    used.insert(chosen[t].id);
    prefix.push_back(chosen[t]);
  }
  return {};
}

}  // namespace oracle
