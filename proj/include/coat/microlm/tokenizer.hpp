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
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "coat/error.hpp"

namespace coat::microlm {

using TokenId = int;

// Whitespace tokenizer. Newlines become the SEP special so that prompt
// separators survive a round trip; other whitespace only separates.
class Tokenizer {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kSep = 2;
  static constexpr TokenId kEos = 3;
  static constexpr std::size_t kNumSpecials = 4;

  Tokenizer() : tokens_{"<pad>", "<unk>", "<sep>", "<eos>"} { Reindex(); }

  // Vocabulary = specials followed by the corpus tokens in lexicographic
  // order.
  static Tokenizer Build(const std::vector<std::string>& corpus) {
    std::set<std::string> words;
    for (const auto& text : corpus)
      for (auto& w : Pieces(text))
        if (w != "\n") words.insert(std::move(w));
    Tokenizer t;
    for (const auto& w : words)
      if (!t.index_.count(w)) t.tokens_.push_back(w);
    t.Reindex();
    return t;
  }

  static Tokenizer FromTokens(std::vector<std::string> tokens) {
    if (tokens.size() < kNumSpecials || tokens[0] != "<pad>" || tokens[1] != "<unk>" || tokens[2] != "<sep>" ||
        tokens[3] != "<eos>")
      Fail(ErrorCode::kCheckpointInvalid, "tokenizer must start with the four specials");
    Tokenizer t;
    t.tokens_ = std::move(tokens);
    t.Reindex();
    if (t.index_.size() != t.tokens_.size()) Fail(ErrorCode::kCheckpointInvalid, "duplicate vocabulary entries");
    return t;
  }

  // Raw pieces of a text: words, and "\n" for each newline.
  static std::vector<std::string> Pieces(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    };
    for (char c : text) {
      if (c == '\n') {
        flush();
        out.emplace_back("\n");
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        flush();
      } else {
        cur.push_back(c);
      }
    }
    flush();
    return out;
  }

  std::vector<TokenId> Encode(std::string_view text) const {
    std::vector<TokenId> ids;
    for (const auto& p : Pieces(text)) ids.push_back(p == "\n" ? kSep : Lookup(p));
    return ids;
  }

  TokenId Lookup(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
  }

  std::string Decode(const std::vector<TokenId>& ids) const {
    std::string out;
    bool after_sep = true;
    for (TokenId id : ids) {
      if (id == kPad || id == kEos) continue;
      if (id == kSep) {
        out += '\n';
        after_sep = true;
        continue;
      }
      if (!after_sep) out += ' ';
      out += token(id);
      after_sep = false;
    }
    return out;
  }

  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Tokenizer& a, const Tokenizer& b) { return a.tokens_ == b.tokens_; }

 private:
  void Reindex() {
    index_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<TokenId>(i));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace coat::microlm
