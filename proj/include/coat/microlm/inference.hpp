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

#include <string>
#include <string_view>
#include <vector>

#include "coat/error.hpp"
#include "coat/microlm/model.hpp"
#include "coat/scorer.hpp"

namespace coat::microlm {

// Model input for a prompt: a leading EOS acts as the start token.
inline std::vector<int> PromptIds(const Model& model, std::string_view prompt) {
  std::vector<int> ids{Tokenizer::kEos};
  auto enc = model.tokenizer().Encode(prompt);
  ids.insert(ids.end(), enc.begin(), enc.end());
  return ids;
}

// Teacher-forced probabilities of each target token given the prompt and
// the gold prefix.
inline TokenLikelihoods SequenceLikelihood(const Model& model, std::string_view prompt, std::string_view target) {
  const auto target_ids = model.tokenizer().Encode(target);
  if (target_ids.empty()) Fail(ErrorCode::kEmptyTarget, "target has no tokens");
  std::vector<int> ids = PromptIds(model, prompt);
  const int first_row = static_cast<int>(ids.size()) - 1;
  ids.insert(ids.end(), target_ids.begin(), target_ids.end() - 1);
  std::vector<int> rows;
  for (std::size_t j = 0; j < target_ids.size(); ++j) rows.push_back(first_row + static_cast<int>(j));
  Mat probs = model.Forward(ids, rows);
  std::vector<double> p;
  std::vector<std::string> tokens;
  for (std::size_t j = 0; j < target_ids.size(); ++j) {
    p.push_back(probs(static_cast<int>(j), target_ids[j]));
    tokens.push_back(model.tokenizer().token(target_ids[j]));
  }
  return TokenLikelihoods::FromProbs(std::move(tokens), std::move(p));
}

// Appends argmax tokens (lowest id on ties) until `stop`, EOS, max_len or the
// context limit.
inline std::string GreedyDecode(const Model& model, std::string_view prompt, std::size_t max_len,
                                int stop = Tokenizer::kEos) {
  std::vector<int> ids = PromptIds(model, prompt);
  if (ids.size() > static_cast<std::size_t>(model.config().context_len))
    Fail(ErrorCode::kContextOverflow, "prompt exceeds context_len");
  std::vector<int> out;
  while (out.size() < max_len && ids.size() <= static_cast<std::size_t>(model.config().context_len)) {
    const int last = static_cast<int>(ids.size()) - 1;
    Mat probs = model.Forward(ids, std::span<const int>(&last, 1));
    Eigen::Index next = 0;
    probs.row(0).maxCoeff(&next);
    if (next == stop || next == Tokenizer::kEos) break;
    out.push_back(static_cast<int>(next));
    ids.push_back(static_cast<int>(next));
  }
  return model.tokenizer().Decode(out);
}

// Scorer backed by a frozen micro-LM. The model must outlive the scorer.
class LocalModelScorer final : public Scorer {
 public:
  explicit LocalModelScorer(const Model& model) : model_(&model) {}

  TokenLikelihoods Score(std::string_view prompt, std::string_view target) const override {
    return SequenceLikelihood(*model_, prompt, target);
  }

  std::string name() const override { return "local"; }

 private:
  const Model* model_;
};

}  // namespace coat::microlm
