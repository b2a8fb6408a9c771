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
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coat/error.hpp"
#include "coat/microlm/inference.hpp"
#include "coat/microlm/model.hpp"
#include "coat/promptfmt.hpp"

namespace coat::microlm {

struct TrainExample {
  std::vector<int> prompt;  // starts with the EOS start token
  std::vector<int> target;
};

inline TrainExample MakeExample(const Model& model, std::string_view prompt, std::string_view target,
                                bool append_eos = true) {
  TrainExample ex{PromptIds(model, prompt), model.tokenizer().Encode(target)};
  if (append_eos) ex.target.push_back(Tokenizer::kEos);
  if (ex.target.empty()) Fail(ErrorCode::kEmptyTarget, "target has no tokens");
  if (ex.prompt.size() + ex.target.size() - 1 > static_cast<std::size_t>(model.config().context_len))
    Fail(ErrorCode::kContextOverflow, std::to_string(ex.prompt.size() + ex.target.size() - 1) +
                                          " tokens exceed context_len " +
                                          std::to_string(model.config().context_len));
  return ex;
}

inline std::vector<TrainExample> MakeExamples(const Model& model, const std::vector<PromptSpec>& prompts,
                                              const promptfmt::PromptStyle& style, bool append_eos = true) {
  std::vector<TrainExample> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) out.push_back(MakeExample(model, promptfmt::Serialize(p, style), p.y_pred, append_eos));
  return out;
}

struct LossAndGrads {
  double loss = 0.0;
  std::size_t tokens = 0;
  std::vector<double> grads;
};

// Mean negative log-likelihood over target positions of the batch; prompt
// positions contribute nothing. Gradients are exact for this graph.
inline LossAndGrads ComputeLossAndGrads(const Model& model, std::span<const TrainExample> batch,
                                        bool with_grads = true) {
  if (batch.empty()) Fail(ErrorCode::kConfigInvalid, "empty batch");
  LossAndGrads out;
  for (const auto& ex : batch) out.tokens += ex.target.size();
  if (with_grads) out.grads.assign(model.num_params(), 0.0);
  const double norm = 1.0 / static_cast<double>(out.tokens);
  Activations cache;
  for (const auto& ex : batch) {
    std::vector<int> ids = ex.prompt;
    ids.insert(ids.end(), ex.target.begin(), ex.target.end() - 1);
    std::vector<int> rows(ex.target.size());
    std::iota(rows.begin(), rows.end(), static_cast<int>(ex.prompt.size()) - 1);
    Mat probs = model.Forward(ids, rows, with_grads ? &cache : nullptr);
    for (std::size_t j = 0; j < ex.target.size(); ++j)
      out.loss -= std::log(probs(static_cast<int>(j), ex.target[j])) * norm;
    if (with_grads) {
      Mat dlogits = probs;
      for (std::size_t j = 0; j < ex.target.size(); ++j) dlogits(static_cast<int>(j), ex.target[j]) -= 1.0;
      dlogits *= norm;
      model.Backward(cache, rows, dlogits, out.grads);
    }
  }
  return out;
}

inline double EvalLoss(const Model& model, std::span<const TrainExample> examples, std::size_t chunk = 64) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < examples.size(); i += chunk) {
    auto part = examples.subspan(i, std::min(chunk, examples.size() - i));
    auto r = ComputeLossAndGrads(model, part, false);
    total += r.loss * static_cast<double>(r.tokens);
    tokens += r.tokens;
  }
  return total / static_cast<double>(tokens);
}

struct TrainConfig {
  double learning_rate = 5e-5;
  std::size_t batch_size = 30;
  std::size_t patience = 2000;  // updates without eval-loss improvement
  std::size_t max_steps = 10000;
  std::size_t eval_every = 100;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;  // global norm; <= 0 disables
  bool linear_decay = false;
  bool append_eos = true;

  void Validate() const {
    if (!(learning_rate > 0.0)) Fail(ErrorCode::kConfigInvalid, "learning_rate must be positive");
    if (patience < 1) Fail(ErrorCode::kConfigInvalid, "patience must be at least 1");
    if (batch_size < 1 || eval_every < 1 || max_steps < 1)
      Fail(ErrorCode::kConfigInvalid, "batch_size, eval_every and max_steps must be positive");
  }
};

struct LossLogRow {
  std::size_t step;
  double train_loss;
  double eval_loss;
};

struct TrainResult {
  std::vector<LossLogRow> log;
  std::size_t best_step = 0;
  double best_eval_loss = std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
  bool early_stopped = false;

  std::string csv() const {
    std::ostringstream ss;
    ss.precision(17);
    ss << "step,train_loss,eval_loss\n";
    for (const auto& r : log) ss << r.step << ',' << r.train_loss << ',' << r.eval_loss << '\n';
    return ss.str();
  }
};

class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, const TrainConfig& cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void Step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
      params[i] -= lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + cfg_.adam_eps);
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

// Adam training with early stopping on eval loss. The model ends holding the
// parameters of the best evaluation.
inline TrainResult Train(Model& model, const std::vector<TrainExample>& train,
                         const std::vector<TrainExample>& eval, const TrainConfig& cfg) {
  cfg.Validate();
  if (train.empty()) Fail(ErrorCode::kConfigInvalid, "no training examples");
  const std::vector<TrainExample>& eval_set = eval.empty() ? train : eval;

  TrainResult result;
  AdamOptimizer adam(model.num_params(), cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::vector<double> best_params = model.params();
  std::vector<TrainExample> batch;
  double interval_loss = 0.0;
  std::size_t interval_steps = 0;

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    batch.clear();
    while (batch.size() < std::min(cfg.batch_size, train.size())) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(train[order[cursor++]]);
    }
    auto lg = ComputeLossAndGrads(model, batch);
    if (!std::isfinite(lg.loss)) Fail(ErrorCode::kDivergenceDetected, "non-finite loss at step " + std::to_string(step));
    if (cfg.grad_clip > 0.0) {
      double sq = 0.0;
      for (double g : lg.grads) sq += g * g;
      const double gnorm = std::sqrt(sq);
      if (gnorm > cfg.grad_clip)
        for (double& g : lg.grads) g *= cfg.grad_clip / gnorm;
    }
    double lr = cfg.learning_rate;
    if (cfg.linear_decay)
      lr *= 1.0 - static_cast<double>(step - 1) / static_cast<double>(cfg.max_steps);
    adam.Step(model.params(), lg.grads, lr);
    for (double p : model.params())
      if (!std::isfinite(p)) Fail(ErrorCode::kDivergenceDetected, "non-finite parameter at step " + std::to_string(step));
    interval_loss += lg.loss;
    ++interval_steps;
    result.steps = step;

    if (step % cfg.eval_every == 0 || step == cfg.max_steps) {
      const double ev = EvalLoss(model, eval_set);
      if (!std::isfinite(ev)) Fail(ErrorCode::kDivergenceDetected, "non-finite eval loss at step " + std::to_string(step));
      result.log.push_back({step, interval_loss / static_cast<double>(interval_steps), ev});
      interval_loss = 0.0;
      interval_steps = 0;
      if (ev < result.best_eval_loss) {
        result.best_eval_loss = ev;
        result.best_step = step;
        best_params = model.params();
      } else if (step - result.best_step >= cfg.patience) {
        result.early_stopped = true;
        break;
      }
    }
  }
  model.params() = std::move(best_params);
  return result;
}

}  // namespace coat::microlm
