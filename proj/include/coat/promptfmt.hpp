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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coat/error.hpp"
#include "coat/text.hpp"

namespace coat {

struct Demo {
  std::string x;
  std::string y;
  std::string id;  // source sample id; not serialized into prompt text

  friend bool operator==(const Demo&, const Demo&) = default;
};

enum class DemoStrategy { kRandom, kInfoOnly, kCoat };

inline std::string_view StrategyName(DemoStrategy s) {
  switch (s) {
    case DemoStrategy::kRandom: return "random";
    case DemoStrategy::kInfoOnly: return "info";
    case DemoStrategy::kCoat: return "coat";
  }
  return "?";
}

inline std::optional<DemoStrategy> ParseStrategy(std::string_view name) {
  if (name == "random") return DemoStrategy::kRandom;
  if (name == "info") return DemoStrategy::kInfoOnly;
  if (name == "coat") return DemoStrategy::kCoat;
  return std::nullopt;
}

// k demonstrations followed by the predicted sample.
struct PromptSpec {
  std::string id;  // predicted sample id
  std::vector<Demo> demos;
  std::string x_pred;
  std::string y_pred;
  DemoStrategy strategy = DemoStrategy::kRandom;
  std::string concept_key;

  std::size_t k() const { return demos.size(); }
};

namespace promptfmt {

enum class StyleKind { kPlain, kInstructed };

struct PromptStyle {
  StyleKind kind = StyleKind::kPlain;
  std::string input_tag = "Input:";
  std::string pred_tag = "Prediction:";
  std::string sep = "\n";
  std::string instruction;
  // Content tokens equal to a tag get a guard prefix; when false such
  // content raises TagCollision instead.
  bool escape_tags = true;
};

inline constexpr char kGuard = '\\';

inline void ValidateStyle(const PromptStyle& style) {
  auto bad = [](const std::string& m) { Fail(ErrorCode::kStyleInvalid, m); };
  if (style.input_tag.empty() || style.pred_tag.empty()) bad("tags must be non-empty");
  if (style.sep.empty()) bad("separator must be non-empty");
  if (style.input_tag == style.pred_tag) bad("tags must differ");
  for (const auto* tag : {&style.input_tag, &style.pred_tag}) {
    if (tag->find(style.sep) != std::string::npos) bad("tag '" + *tag + "' contains the separator");
    if (tag->find(' ') != std::string::npos) bad("tag '" + *tag + "' contains a space");
    if (tag->front() == kGuard) bad("tag '" + *tag + "' starts with the guard character");
  }
  if (style.kind == StyleKind::kInstructed && style.instruction.find(style.sep) != std::string::npos)
    bad("instruction contains the separator");
}

namespace detail {

// True when `piece` is some number (possibly zero) of guard characters
// followed by a tag.
inline bool IsGuardedTag(std::string_view piece, const PromptStyle& style, std::size_t* guards) {
  std::size_t n = 0;
  while (n < piece.size() && piece[n] == kGuard) ++n;
  std::string_view rest = piece.substr(n);
  if (rest == style.input_tag || rest == style.pred_tag) {
    *guards = n;
    return true;
  }
  return false;
}

inline std::string Escape(std::string_view content, const PromptStyle& style) {
  if (content.find(style.sep) != std::string_view::npos)
    Fail(ErrorCode::kTagCollision, "content contains the separator");
  auto pieces = text::Split(content, " ");
  for (auto& p : pieces) {
    std::size_t guards = 0;
    if (!IsGuardedTag(p, style, &guards)) continue;
    if (!style.escape_tags) Fail(ErrorCode::kTagCollision, "content contains tag '" + p + "'");
    p.insert(0, 1, kGuard);
  }
  return text::Join(pieces, " ");
}

inline std::string Unescape(const std::vector<std::string>& pieces, std::size_t from, std::size_t to,
                            const PromptStyle& style) {
  std::vector<std::string> out(pieces.begin() + static_cast<std::ptrdiff_t>(from),
                               pieces.begin() + static_cast<std::ptrdiff_t>(to));
  for (auto& p : out) {
    std::size_t guards = 0;
    if (IsGuardedTag(p, style, &guards) && guards > 0) p.erase(0, 1);
  }
  return text::Join(out, " ");
}

// Splits "<input_tag> x <pred_tag> y" into (x, y).
inline std::pair<std::string, std::string> ParseLine(std::string_view line, const PromptStyle& style) {
  auto pieces = text::Split(line, " ");
  if (pieces.size() < 3 || pieces[0] != style.input_tag)
    Fail(ErrorCode::kMalformedPrompt, "line does not start with '" + style.input_tag + "'");
  std::size_t pred = 0;
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    if (pieces[i] == style.input_tag) Fail(ErrorCode::kMalformedPrompt, "unexpected input tag");
    if (pieces[i] == style.pred_tag) {
      if (pred) Fail(ErrorCode::kMalformedPrompt, "repeated prediction tag");
      pred = i;
    }
  }
  if (!pred || pred + 1 >= pieces.size())
    Fail(ErrorCode::kMalformedPrompt, "missing '" + style.pred_tag + " ' in line");
  return {Unescape(pieces, 1, pred, style), Unescape(pieces, pred + 1, pieces.size(), style)};
}

}  // namespace detail

// "Input: x1 Prediction: y1<sep>...<sep>Input: x_pred Prediction: ", with the
// instruction and a separator in front for the instructed style.
inline std::string Serialize(const std::vector<Demo>& demos, std::string_view x_pred, const PromptStyle& style) {
  ValidateStyle(style);
  std::string out;
  if (style.kind == StyleKind::kInstructed) {
    out += style.instruction;
    out += style.sep;
  }
  for (const auto& d : demos) {
    out += style.input_tag + " " + detail::Escape(d.x, style) + " " + style.pred_tag + " " +
           detail::Escape(d.y, style);
    out += style.sep;
  }
  out += style.input_tag + " " + detail::Escape(x_pred, style) + " " + style.pred_tag + " ";
  return out;
}

inline std::string Serialize(const PromptSpec& spec, const PromptStyle& style) {
  return Serialize(spec.demos, spec.x_pred, style);
}

// Reconstructs demos (x, y) and x_pred; y_pred and demo ids are not part of
// the text and stay empty.
inline PromptSpec Parse(std::string_view prompt, const PromptStyle& style) {
  ValidateStyle(style);
  auto lines = text::Split(prompt, style.sep);
  std::size_t first = 0;
  if (style.kind == StyleKind::kInstructed) {
    if (lines.size() < 2 || lines[0] != style.instruction)
      Fail(ErrorCode::kMalformedPrompt, "missing instruction prefix");
    first = 1;
  }
  const std::string& last = lines.back();
  const std::string tail = " " + style.pred_tag + " ";
  if (last.size() < tail.size() || last.compare(last.size() - tail.size(), tail.size(), tail) != 0)
    Fail(ErrorCode::kMalformedPrompt, "prompt must end with '" + style.pred_tag + " '");

  PromptSpec spec;
  for (std::size_t i = first; i + 1 < lines.size(); ++i) {
    auto [x, y] = detail::ParseLine(lines[i], style);
    spec.demos.push_back({std::move(x), std::move(y), {}});
  }
  // Final line: append a sentinel so ParseLine sees a non-empty label slot.
  auto [x, sentinel] = detail::ParseLine(last + "_", style);
  if (sentinel != "_") Fail(ErrorCode::kMalformedPrompt, "text after the generation point");
  spec.x_pred = std::move(x);
  return spec;
}

inline nlohmann::json StyleToJson(const PromptStyle& style) {
  nlohmann::json j;
  j["input_tag"] = style.input_tag;
  j["pred_tag"] = style.pred_tag;
  j["sep"] = style.sep;
  j["instruction"] = style.kind == StyleKind::kInstructed ? nlohmann::json(style.instruction) : nlohmann::json();
  return j;
}

inline PromptStyle StyleFromJson(const nlohmann::json& j) {
  PromptStyle style;
  style.input_tag = j.value("input_tag", style.input_tag);
  style.pred_tag = j.value("pred_tag", style.pred_tag);
  style.sep = j.value("sep", style.sep);
  if (j.contains("instruction") && !j["instruction"].is_null()) {
    style.kind = StyleKind::kInstructed;
    style.instruction = j["instruction"].get<std::string>();
  }
  ValidateStyle(style);
  return style;
}

}  // namespace promptfmt
}  // namespace coat
