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
#include <initializer_list>
#include <random>
#include <vector>

namespace coat {

using Rng = std::mt19937_64;

// Derives an independent stream from a run seed and a path of unit indices,
// so that work split across workers draws the same numbers as a serial run.
inline Rng DeriveRng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> material;
  material.reserve(2 + 2 * path.size());
  material.push_back(static_cast<std::uint32_t>(seed));
  material.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (std::uint64_t p : path) {
    material.push_back(static_cast<std::uint32_t>(p));
    material.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(material.begin(), material.end());
  return Rng(seq);
}

// Uniform integer in [lo, hi].
inline std::int64_t UniformInt(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

// First `count` entries of a seeded Fisher-Yates shuffle of `items`.
template <typename T>
std::vector<T> SampleWithoutReplacement(std::vector<T> items, std::size_t count, Rng& rng) {
  count = std::min(count, items.size());
  for (std::size_t i = 0; i < count; ++i) {
    auto j = static_cast<std::size_t>(
        UniformInt(rng, static_cast<std::int64_t>(i), static_cast<std::int64_t>(items.size()) - 1));
    std::swap(items[i], items[j]);
  }
  items.resize(count);
  return items;
}

}  // namespace coat
