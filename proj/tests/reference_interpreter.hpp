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

// Test-only second interpreter of chain keys. Written against the key
// string and a plain list of (entity, attribute, value) triples, sharing no
// code with the library's executor.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace reference {

using Triple = std::tuple<std::string, std::string, std::int64_t>;

inline std::vector<std::string> Steps(const std::string& key) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (key.compare(i, 2, "->") == 0) {
      out.push_back(cur);
      cur.clear();
      ++i;
    } else {
      cur += key[i];
    }
  }
  out.push_back(cur);
  return out;
}

// Returns nullopt when the instance underflows.
inline std::optional<std::int64_t> Run(const std::string& key, const std::string& entity, const std::string& filter,
                                       const std::vector<Triple>& records) {
  std::vector<std::int64_t> sorted;  // ascending live pool
  std::vector<std::int64_t> taken;
  for (const auto& step : Steps(key)) {
    if (step == "select") {
      for (const auto& [e, a, v] : records)
        if (e == entity) sorted.push_back(v);
      std::sort(sorted.begin(), sorted.end());
    } else if (step == "filter_eq") {
      sorted.clear();
      for (const auto& [e, a, v] : records)
        if (e == entity && a == filter) sorted.push_back(v);
      std::sort(sorted.begin(), sorted.end());
    } else if (step == "maximum") {
      if (sorted.empty()) return std::nullopt;
      taken.push_back(sorted.back());
      sorted.pop_back();
    } else if (step == "minimum") {
      if (sorted.empty()) return std::nullopt;
      taken.push_back(sorted.front());
      sorted.erase(sorted.begin());
    } else if (step == "list") {
    } else if (step == "sum") {
      std::int64_t s = 0;
      for (auto v : taken) s += v;
      return s;
    } else if (step == "count") {
      return static_cast<std::int64_t>(sorted.size());
    } else if (step == "difference") {
      return taken.at(0) - taken.at(1);
    }
  }
  if (taken.empty()) return std::nullopt;
  return taken.back();
}

}  // namespace reference
