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

#include <nlohmann/json.hpp>

#include "coat/dataset.hpp"
#include "coat/error.hpp"
#include "coat/microlm/model.hpp"

namespace coat::microlm {

inline constexpr int kCheckpointVersion = 1;

// JSON-wrapped tensors with shapes, the model config and the vocabulary.
inline OrderedJson CheckpointToJson(const Model& model, const std::string& config_digest = {}) {
  const auto& c = model.config();
  OrderedJson j;
  j["format"] = "coat-microlm";
  j["version"] = kCheckpointVersion;
  j["config_digest"] = config_digest;
  j["config"] = {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},   {"n_layers", c.n_layers},
                 {"n_heads", c.n_heads},       {"context_len", c.context_len}, {"d_ff", c.d_ff},
                 {"seed", c.seed},             {"init_std", c.init_std}};
  j["tokenizer"] = model.tokenizer().tokens();
  OrderedJson tensors = OrderedJson::array();
  for (const auto& t : model.tensors()) {
    OrderedJson tj;
    tj["name"] = t.name;
    tj["shape"] = {t.rows, t.cols};
    tj["data"] = std::vector<double>(model.params().begin() + static_cast<std::ptrdiff_t>(t.offset),
                                     model.params().begin() + static_cast<std::ptrdiff_t>(t.offset + t.size()));
    tensors.push_back(std::move(tj));
  }
  j["tensors"] = std::move(tensors);
  return j;
}

inline Model CheckpointFromJson(const Json& j, std::string* config_digest = nullptr) {
  try {
    if (j.at("format") != "coat-microlm") Fail(ErrorCode::kCheckpointInvalid, "unknown checkpoint format");
    if (j.at("version").get<int>() != kCheckpointVersion)
      Fail(ErrorCode::kCheckpointInvalid, "unsupported checkpoint version");
    const auto& cj = j.at("config");
    ModelConfig cfg;
    cfg.d_model = cj.at("d_model").get<int>();
    cfg.n_layers = cj.at("n_layers").get<int>();
    cfg.n_heads = cj.at("n_heads").get<int>();
    cfg.context_len = cj.at("context_len").get<int>();
    cfg.d_ff = cj.at("d_ff").get<int>();
    cfg.seed = cj.at("seed").get<std::uint64_t>();
    cfg.init_std = cj.at("init_std").get<double>();
    Tokenizer tok = Tokenizer::FromTokens(j.at("tokenizer").get<std::vector<std::string>>());
    Model shape(cfg, tok);
    std::vector<double> params(shape.num_params());
    const auto& tensors = j.at("tensors");
    if (tensors.size() != shape.tensors().size()) Fail(ErrorCode::kCheckpointInvalid, "tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& info = shape.tensors()[i];
      const auto& tj = tensors[i];
      if (tj.at("name") != info.name || tj.at("shape")[0] != info.rows || tj.at("shape")[1] != info.cols)
        Fail(ErrorCode::kCheckpointInvalid, "tensor '" + info.name + "' has unexpected name or shape");
      const auto data = tj.at("data").get<std::vector<double>>();
      if (data.size() != info.size()) Fail(ErrorCode::kCheckpointInvalid, "tensor '" + info.name + "' size mismatch");
      std::copy(data.begin(), data.end(), params.begin() + static_cast<std::ptrdiff_t>(info.offset));
    }
    if (config_digest) *config_digest = j.value("config_digest", std::string());
    return Model(cfg, std::move(tok), std::move(params));
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kCheckpointInvalid, e.what());
  }
}

inline void SaveCheckpoint(const Model& model, const std::string& path, const std::string& config_digest = {}) {
  WriteFile(path, CheckpointToJson(model, config_digest).dump());
}

inline Model LoadCheckpoint(const std::string& path, std::string* config_digest = nullptr) {
  Json j;
  try {
    j = Json::parse(ReadFile(path));
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kCheckpointInvalid, e.what());
  }
  return CheckpointFromJson(j, config_digest);
}

}  // namespace coat::microlm
