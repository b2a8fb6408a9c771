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
#include <vector>

#include "coat/error.hpp"
#include "coat/parallel.hpp"
#include "coat/rng.hpp"

namespace coat::evalharness {

struct BootstrapResult {
  double mean = 0.0;           // mean of the original scores
  double resample_mean = 0.0;  // mean of the r resample means
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct BootstrapConfig {
  std::size_t population = 100;
  std::size_t repeats = 200;
  double level = 0.95;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

// Linear-interpolated empirical quantile of sorted values.
inline double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Percentile bootstrap: `repeats` resamples of `population` scores drawn with
// replacement. Each repeat has its own derived stream, so worker count does
// not change the result. The interval is widened, if ever needed, to contain
// both reported means.
inline BootstrapResult BootstrapCi(const std::vector<double>& scores, const BootstrapConfig& cfg) {
  if (scores.empty()) Fail(ErrorCode::kEmptyEvalSet, "bootstrap over no scores");
  if (cfg.population < 1 || cfg.repeats < 1 || !(cfg.level > 0.0 && cfg.level < 1.0))
    Fail(ErrorCode::kConfigInvalid, "bootstrap needs population, repeats >= 1 and level in (0, 1)");
  std::vector<double> means(cfg.repeats);
  ParallelFor(cfg.repeats, cfg.workers, [&](std::size_t rep) {
    Rng rng = DeriveRng(cfg.seed, {3, rep});
    std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < cfg.population; ++i) s += scores[pick(rng)];
    means[rep] = s / static_cast<double>(cfg.population);
  });
  BootstrapResult r;
  for (double s : scores) r.mean += s;
  r.mean /= static_cast<double>(scores.size());
  for (double m : means) r.resample_mean += m;
  r.resample_mean /= static_cast<double>(means.size());
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - cfg.level) / 2.0;
  r.ci_lo = std::min({Quantile(means, alpha), r.mean, r.resample_mean});
  r.ci_hi = std::max({Quantile(means, 1.0 - alpha), r.mean, r.resample_mean});
  return r;
}

}  // namespace coat::evalharness
