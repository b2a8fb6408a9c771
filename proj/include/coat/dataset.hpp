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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coat/error.hpp"
#include "coat/text.hpp"

namespace coat {

using Json = nlohmann::json;
// Keys compare in insertion order so emitted objects follow the schema order.
using OrderedJson = nlohmann::ordered_json;

enum class Split { kTrain, kEval };

inline std::string_view SplitName(Split s) { return s == Split::kTrain ? "train" : "eval"; }

struct QASample {
  std::string id;
  std::string question;
  std::string context;
  std::string answer;
  std::string concept_key;
  Split split = Split::kTrain;

  friend bool operator==(const QASample&, const QASample&) = default;
};

using Dataset = std::vector<QASample>;

// Demonstration input text: the question followed by its context flattened
// onto one line.
inline std::string SampleInput(const QASample& s) {
  if (s.context.empty()) return s.question;
  return s.question + " Context: " + text::ReplaceAll(s.context, "\n", " ");
}

inline OrderedJson ToJson(const QASample& s) {
  OrderedJson j;
  j["id"] = s.id;
  j["question"] = s.question;
  j["context"] = s.context;
  j["answer"] = s.answer;
  j["concept"] = s.concept_key;
  j["split"] = SplitName(s.split);
  return j;
}

inline QASample SampleFromJson(const Json& j) {
  QASample s;
  try {
    s.id = j.at("id").get<std::string>();
    s.question = j.at("question").get<std::string>();
    s.context = j.value("context", std::string());
    s.answer = j.at("answer").get<std::string>();
    s.concept_key = j.value("concept", std::string());
    const std::string split = j.value("split", std::string("train"));
    if (split == "train") {
      s.split = Split::kTrain;
    } else if (split == "eval") {
      s.split = Split::kEval;
    } else {
      Fail(ErrorCode::kDatasetInvalid, "split must be train|eval, got '" + split + "'");
    }
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kDatasetInvalid, e.what());
  }
  return s;
}

inline std::string WriteDatasetJsonl(const Dataset& data) {
  std::string out;
  for (const auto& s : data) {
    out += ToJson(s).dump();
    out += '\n';
  }
  return out;
}

inline Dataset ReadDatasetJsonl(std::string_view content) {
  Dataset data;
  std::set<std::string> ids;
  std::size_t lineno = 0;
  for (const auto& line : text::Split(content, "\n")) {
    ++lineno;
    if (text::Trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      Fail(ErrorCode::kDatasetInvalid, "line " + std::to_string(lineno) + ": " + e.what());
    }
    auto s = SampleFromJson(j);
    if (!ids.insert(s.id).second) Fail(ErrorCode::kDatasetInvalid, "duplicate id '" + s.id + "'");
    data.push_back(std::move(s));
  }
  return data;
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Creates missing parent directories.
inline void WriteFile(const std::string& path, std::string_view content) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline Dataset FilterSplit(const Dataset& data, Split split) {
  Dataset out;
  for (const auto& s : data)
    if (s.split == split) out.push_back(s);
  return out;
}

}  // namespace coat
