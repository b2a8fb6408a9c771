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
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "coat/error.hpp"
#include "coat/text.hpp"

namespace coat {

struct TokenLikelihoods {
  std::vector<std::string> tokens;
  std::vector<double> probs;
  double mean_prob = 0.0;

  static TokenLikelihoods FromProbs(std::vector<std::string> tokens, std::vector<double> probs) {
    if (probs.empty()) Fail(ErrorCode::kEmptyTarget, "no target tokens");
    if (tokens.size() != probs.size()) Fail(ErrorCode::kScorerFailure, "tokens/probs length mismatch");
    TokenLikelihoods t;
    t.tokens = std::move(tokens);
    t.probs = std::move(probs);
    t.mean_prob = std::accumulate(t.probs.begin(), t.probs.end(), 0.0) / static_cast<double>(t.probs.size());
    return t;
  }

  // exp(mean log p); the alternative aggregation offered by selection.
  double geometric_mean() const {
    double s = 0.0;
    for (double p : probs) s += std::log(p);
    return std::exp(s / static_cast<double>(probs.size()));
  }

  nlohmann::json to_json() const {
    return {{"tokens", tokens}, {"probs", probs}, {"mean_prob", mean_prob}};
  }
};

// Provider of teacher-forced target-token probabilities given a prompt.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual TokenLikelihoods Score(std::string_view prompt, std::string_view target) const = 0;
  // True when concurrent Score calls are safe and independent.
  virtual bool stateless() const { return true; }
  virtual std::string name() const = 0;
};

class UniformScorer final : public Scorer {
 public:
  explicit UniformScorer(double p) : p_(p) {
    if (!(p > 0.0 && p <= 1.0)) Fail(ErrorCode::kConfigInvalid, "uniform scorer needs p in (0, 1]");
  }

  TokenLikelihoods Score(std::string_view, std::string_view target) const override {
    auto tokens = text::SplitWhitespace(target);
    if (tokens.empty()) Fail(ErrorCode::kEmptyTarget, "empty target");
    std::vector<double> probs(tokens.size(), p_);
    return TokenLikelihoods::FromProbs(std::move(tokens), std::move(probs));
  }

  std::string name() const override { return "uniform"; }

 private:
  double p_;
};

// Fixed table (prompt, target) -> per-token probabilities.
class LookupScorer final : public Scorer {
 public:
  using Key = std::pair<std::string, std::string>;

  LookupScorer() = default;
  explicit LookupScorer(std::map<Key, std::vector<double>> table) : table_(std::move(table)) {}

  void Add(std::string prompt, std::string target, std::vector<double> probs) {
    table_[{std::move(prompt), std::move(target)}] = std::move(probs);
  }

  TokenLikelihoods Score(std::string_view prompt, std::string_view target) const override {
    auto it = table_.find({std::string(prompt), std::string(target)});
    if (it == table_.end()) Fail(ErrorCode::kLookupMiss, "no entry for target '" + std::string(target) + "'");
    auto tokens = text::SplitWhitespace(target);
    if (tokens.size() != it->second.size()) tokens.assign(it->second.size(), std::string(target));
    return TokenLikelihoods::FromProbs(std::move(tokens), it->second);
  }

  const std::map<Key, std::vector<double>>& table() const { return table_; }

  // {"entries": [{"prompt": str, "target": str, "probs": [float]}]}
  static LookupScorer FromJson(const nlohmann::json& j) {
    LookupScorer s;
    for (const auto& e : j.at("entries"))
      s.Add(e.at("prompt").get<std::string>(), e.at("target").get<std::string>(),
            e.at("probs").get<std::vector<double>>());
    return s;
  }

  std::string name() const override { return "lookup"; }

 private:
  std::map<Key, std::vector<double>> table_;
};

// Test double computing probabilities from an arbitrary callable.
class FunctionScorer final : public Scorer {
 public:
  using Fn = std::function<std::vector<double>(std::string_view prompt, std::string_view target)>;
  explicit FunctionScorer(Fn fn) : fn_(std::move(fn)) {}

  TokenLikelihoods Score(std::string_view prompt, std::string_view target) const override {
    auto probs = fn_(prompt, target);
    auto tokens = text::SplitWhitespace(target);
    if (tokens.size() != probs.size()) tokens.assign(probs.size(), std::string(target));
    return TokenLikelihoods::FromProbs(std::move(tokens), std::move(probs));
  }

  std::string name() const override { return "function"; }

 private:
  Fn fn_;
};

}  // namespace coat
