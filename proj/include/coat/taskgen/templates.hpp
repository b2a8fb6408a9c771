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

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coat/error.hpp"
#include "coat/rng.hpp"
#include "coat/taskgen/chain.hpp"
#include "coat/text.hpp"

namespace coat::taskgen {

// Question surface forms keyed by canonical chain key. Placeholders:
// {entity} is the selected entity, {attr} the filter attribute (or the
// entity's first attribute when the chain has no filter). A family under
// the key "*" serves every chain without a family of its own.
class TemplateRegistry {
 public:
  TemplateRegistry() = default;
  explicit TemplateRegistry(std::map<std::string, std::vector<std::string>> families)
      : families_(std::move(families)) {}

  static TemplateRegistry FromJson(const nlohmann::json& j) {
    std::map<std::string, std::vector<std::string>> families;
    for (auto it = j.begin(); it != j.end(); ++it) {
      auto variants = it.value().get<std::vector<std::string>>();
      if (variants.empty()) Fail(ErrorCode::kConfigInvalid, "template family '" + it.key() + "' is empty");
      families[it.key()] = std::move(variants);
    }
    return TemplateRegistry(std::move(families));
  }

  static const TemplateRegistry& Default() {
    static const TemplateRegistry registry = FromJson(nlohmann::json::parse(R"({
      "select->maximum": [
        "what was the highest {attr} of the {entity}?",
        "what is the best {attr} result of the {entity}?"],
      "select->minimum": [
        "what was the lowest {attr} of the {entity}?",
        "what is the worst {attr} result of the {entity}?"],
      "select->maximum->list->maximum->sum": [
        "how many points did the {entity} score in their two highest scoring games?",
        "how many points did the {entity} score in their two highest scoring matches?"],
      "select->minimum->list->minimum->sum": [
        "how many points did the {entity} score in their two lowest scoring games?",
        "how many points did the {entity} score in their two lowest scoring matches?"],
      "select->maximum->list->minimum->difference": [
        "what is the difference between the highest and the lowest {attr} of the {entity}?"],
      "select->maximum->list->maximum->difference": [
        "by how much did the best {attr} of the {entity} exceed their second best?"],
      "select->filter_eq->count": [
        "how many {attr} are listed for the {entity}?"],
      "select->filter_eq->maximum": [
        "what was the highest of the {attr} of the {entity}?"]
    })"));
    return registry;
  }

  bool contains(std::string_view key) const { return families_.count(std::string(key)) > 0; }

  const std::vector<std::string>* find(std::string_view key) const {
    auto it = families_.find(std::string(key));
    if (it == families_.end()) it = families_.find(kWildcard);
    return it == families_.end() ? nullptr : &it->second;
  }

  static constexpr const char* kWildcard = "*";

 private:
  std::map<std::string, std::vector<std::string>> families_;
};

// Fallback surface form for chains without a registered family.
inline std::string GenericQuestion(const ReasoningChain& chain, std::string_view entity,
                                   std::string_view attr) {
  std::string q = "apply " + chain.key() + " to " + std::string(entity);
  if (chain.has_filter()) q += " where " + std::string(attr);
  return q;
}

inline std::string FillTemplate(std::string_view tmpl, std::string_view entity, std::string_view attr) {
  std::string out = text::ReplaceAll(tmpl, "{entity}", entity);
  return text::ReplaceAll(out, "{attr}", attr);
}

}  // namespace coat::taskgen
