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

// Central-difference gradient check for the micro-LM, shared by the unit
// tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "coat/microlm/trainer.hpp"
#include "coat/rng.hpp"

namespace gradcheck {

struct Report {
  std::size_t checked = 0;
  std::size_t tensors = 0;
  double worst_rel = 0.0;
  std::string worst_where;
};

// Relative error |a - n| / max(|a|, |n|, floor).
inline double RelErr(double a, double n, double floor = 1e-8) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

// Checks `per_tensor` coordinates of every tensor. Embedding rows are drawn
// from the tokens and positions the batch actually uses.
inline Report Check(coat::microlm::Model& model, const std::vector<coat::microlm::TrainExample>& batch,
                    std::size_t per_tensor, double eps, std::uint64_t seed) {
  using namespace coat::microlm;
  const auto analytic = ComputeLossAndGrads(model, batch).grads;
  std::set<int> used_tokens;
  int max_len = 0;
  for (const auto& ex : batch) {
    used_tokens.insert(ex.prompt.begin(), ex.prompt.end());
    used_tokens.insert(ex.target.begin(), ex.target.end() - 1);
    max_len = std::max(max_len, static_cast<int>(ex.prompt.size() + ex.target.size() - 1));
  }
  const std::vector<int> tokens(used_tokens.begin(), used_tokens.end());
  coat::Rng rng(seed);
  Report rep;
  for (std::size_t t = 0; t < model.tensors().size(); ++t) {
    const auto& info = model.tensors()[t];
    ++rep.tensors;
    for (std::size_t c = 0; c < per_tensor; ++c) {
      int row = static_cast<int>(coat::UniformInt(rng, 0, info.rows - 1));
      if (t == 0) row = tokens[static_cast<std::size_t>(coat::UniformInt(rng, 0, static_cast<std::int64_t>(tokens.size()) - 1))];
      if (t == 1) row = static_cast<int>(coat::UniformInt(rng, 0, max_len - 1));
      const int col = static_cast<int>(coat::UniformInt(rng, 0, info.cols - 1));
      const std::size_t idx = info.offset + static_cast<std::size_t>(row) * static_cast<std::size_t>(info.cols) +
                              static_cast<std::size_t>(col);
      double& p = model.params()[idx];
      const double saved = p;
      p = saved + eps;
      const double up = ComputeLossAndGrads(model, batch, false).loss;
      p = saved - eps;
      const double down = ComputeLossAndGrads(model, batch, false).loss;
      p = saved;
      const double numeric = (up - down) / (2 * eps);
      const double rel = RelErr(analytic[idx], numeric);
      ++rep.checked;
      if (rel > rep.worst_rel) {
        rep.worst_rel = rel;
        rep.worst_where = info.name + "[" + std::to_string(row) + "," + std::to_string(col) + "] analytic=" +
                          std::to_string(analytic[idx]) + " numeric=" + std::to_string(numeric);
      }
    }
  }
  return rep;
}

}  // namespace gradcheck
