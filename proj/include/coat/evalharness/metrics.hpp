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

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coat/text.hpp"

namespace coat::evalharness {

enum class Metric { kRougeL, kExactMatch };

inline std::string_view MetricName(Metric m) { return m == Metric::kRougeL ? "rouge_l" : "exact_match"; }

inline std::optional<Metric> ParseMetric(std::string_view name) {
  if (name == "rouge_l") return Metric::kRougeL;
  if (name == "exact_match") return Metric::kExactMatch;
  return std::nullopt;
}

inline std::size_t LcsLength(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// ROUGE-L balanced F-measure over lowercased whitespace tokens.
inline double RougeL(std::string_view candidate, std::string_view reference) {
  const auto cand = text::SplitWhitespace(text::ToLower(candidate));
  const auto ref = text::SplitWhitespace(text::ToLower(reference));
  if (cand.empty() && ref.empty()) return 1.0;
  if (cand.empty() || ref.empty()) return 0.0;
  const double lcs = static_cast<double>(LcsLength(cand, ref));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(cand.size());
  const double r = lcs / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

// Lowercase, drop characters that are neither alphanumeric nor whitespace,
// collapse whitespace runs.
inline std::string NormalizeAnswer(std::string_view s) {
  std::string kept;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      kept.push_back(static_cast<char>(std::tolower(u)));
    } else if (std::isspace(u)) {
      kept.push_back(' ');
    }
  }
  return text::Join(text::SplitWhitespace(kept), " ");
}

inline double ExactMatch(std::string_view candidate, std::string_view reference) {
  return NormalizeAnswer(candidate) == NormalizeAnswer(reference) ? 1.0 : 0.0;
}

inline double Score(Metric m, std::string_view candidate, std::string_view reference) {
  return m == Metric::kRougeL ? RougeL(candidate, reference) : ExactMatch(candidate, reference);
}

}  // namespace coat::evalharness
