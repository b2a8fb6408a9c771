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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coat/error.hpp"
#include "coat/text.hpp"

namespace coat::taskgen {

enum class OpKind { kSelect, kFilterEq, kMaximum, kMinimum, kList, kSum, kCount, kDifference };

constexpr std::string_view OpName(OpKind kind) {
  switch (kind) {
    case OpKind::kSelect: return "select";
    case OpKind::kFilterEq: return "filter_eq";
    case OpKind::kMaximum: return "maximum";
    case OpKind::kMinimum: return "minimum";
    case OpKind::kList: return "list";
    case OpKind::kSum: return "sum";
    case OpKind::kCount: return "count";
    case OpKind::kDifference: return "difference";
  }
  return "?";
}

inline std::optional<OpKind> ParseOpName(std::string_view name) {
  for (OpKind k : {OpKind::kSelect, OpKind::kFilterEq, OpKind::kMaximum, OpKind::kMinimum,
                   OpKind::kList, OpKind::kSum, OpKind::kCount, OpKind::kDifference}) {
    if (OpName(k) == name) return k;
  }
  return std::nullopt;
}

// SUM, COUNT and DIFFERENCE end a chain; MAXIMUM/MINIMUM may also end one,
// in which case the popped value is the answer.
constexpr bool IsStrictTerminal(OpKind kind) {
  return kind == OpKind::kSum || kind == OpKind::kCount || kind == OpKind::kDifference;
}

constexpr bool IsPop(OpKind kind) { return kind == OpKind::kMaximum || kind == OpKind::kMinimum; }

struct Operation {
  OpKind kind;
  // Entity name for SELECT, attribute label for FILTER_EQ; empty otherwise.
  std::string param;

  friend bool operator==(const Operation&, const Operation&) = default;
};

class ReasoningChain {
 public:
  ReasoningChain() = default;
  explicit ReasoningChain(std::vector<Operation> steps) : steps_(std::move(steps)) {}

  static ReasoningChain FromKinds(const std::vector<OpKind>& kinds) {
    std::vector<Operation> steps;
    for (OpKind k : kinds) steps.push_back({k, {}});
    return ReasoningChain(std::move(steps));
  }

  // Parses a canonical key such as "select->maximum->sum". Parameters are
  // left unbound.
  static ReasoningChain FromKey(std::string_view key) {
    std::vector<OpKind> kinds;
    if (!key.empty()) {
      for (const auto& name : text::Split(key, "->")) {
        auto k = ParseOpName(name);
        if (!k) Fail(ErrorCode::kInvalidChain, "unknown operation '" + name + "'");
        kinds.push_back(*k);
      }
    }
    return FromKinds(kinds);
  }

  const std::vector<Operation>& steps() const { return steps_; }
  std::vector<Operation>& mutable_steps() { return steps_; }
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }

  std::vector<OpKind> kinds() const {
    std::vector<OpKind> out;
    for (const auto& s : steps_) out.push_back(s.kind);
    return out;
  }

  // Step kinds joined by "->"; parameters do not contribute.
  std::string key() const {
    std::string out;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      if (i) out += "->";
      out += OpName(steps_[i].kind);
    }
    return out;
  }

  // Number of MAXIMUM/MINIMUM pops; the target entity needs at least this
  // many records in its (filtered) pool.
  std::size_t pops() const {
    return static_cast<std::size_t>(
        std::count_if(steps_.begin(), steps_.end(), [](const Operation& s) { return IsPop(s.kind); }));
  }

  bool has_filter() const {
    return std::any_of(steps_.begin(), steps_.end(),
                       [](const Operation& s) { return s.kind == OpKind::kFilterEq; });
  }

 private:
  std::vector<Operation> steps_;
};

enum class ViolationKind { kEmptyChain, kSelectNotFirst, kNonTerminalEnd, kArityUnderflow, kTerminalNotLast };

constexpr std::string_view ViolationName(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kEmptyChain: return "EmptyChain";
    case ViolationKind::kSelectNotFirst: return "SelectNotFirst";
    case ViolationKind::kNonTerminalEnd: return "NonTerminalEnd";
    case ViolationKind::kArityUnderflow: return "ArityUnderflow";
    case ViolationKind::kTerminalNotLast: return "TerminalNotLast";
  }
  return "?";
}

struct ChainViolation {
  ViolationKind kind;
  std::size_t step;  // index of the offending step (0 for an empty chain)
  std::string detail;
};

// Type-checks a chain under the pool/accumulator stack semantics:
//   SELECT      loads the entity's records into a live pool (first step only)
//   FILTER_EQ   narrows the live pool to records with the bound attribute
//   MAX/MIN     move the pool extremum to the accumulator; the pool closes
//   LIST        keeps the reduced pool live for further steps
//   SUM         total of the accumulator (needs >= 1 value)
//   COUNT       size of the live pool
//   DIFFERENCE  acc[0] - acc[1] (needs >= 2 values)
// Returns nullopt when the chain is well typed.
inline std::optional<ChainViolation> ValidateChain(const ReasoningChain& chain) {
  const auto& steps = chain.steps();
  if (steps.empty()) return ChainViolation{ViolationKind::kEmptyChain, 0, "chain has no steps"};
  if (steps[0].kind != OpKind::kSelect)
    return ChainViolation{ViolationKind::kSelectNotFirst, 0, "first step must be select"};

  bool pool_live = true;
  std::size_t acc = 0;
  for (std::size_t i = 1; i < steps.size(); ++i) {
    const OpKind kind = steps[i].kind;
    if (IsStrictTerminal(steps[i - 1].kind))
      return ChainViolation{ViolationKind::kTerminalNotLast, i - 1,
                            std::string(OpName(steps[i - 1].kind)) + " must be the last step"};
    switch (kind) {
      case OpKind::kSelect:
        return ChainViolation{ViolationKind::kSelectNotFirst, i, "select may only appear first"};
      case OpKind::kFilterEq:
      case OpKind::kCount:
        if (!pool_live)
          return ChainViolation{ViolationKind::kArityUnderflow, i,
                                std::string(OpName(kind)) + " needs a live pool (insert list)"};
        break;
      case OpKind::kMaximum:
      case OpKind::kMinimum:
        if (!pool_live)
          return ChainViolation{ViolationKind::kArityUnderflow, i,
                                std::string(OpName(kind)) + " needs a live pool (insert list)"};
        ++acc;
        pool_live = false;
        break;
      case OpKind::kList:
        pool_live = true;
        break;
      case OpKind::kSum:
        if (acc < 1)
          return ChainViolation{ViolationKind::kArityUnderflow, i, "sum over an empty accumulator"};
        break;
      case OpKind::kDifference:
        if (acc < 2)
          return ChainViolation{ViolationKind::kArityUnderflow, i,
                                "difference needs 2 accumulated values, have " + std::to_string(acc)};
        break;
    }
  }
  const OpKind last = steps.back().kind;
  if (!IsStrictTerminal(last) && !IsPop(last))
    return ChainViolation{ViolationKind::kNonTerminalEnd, steps.size() - 1,
                          std::string("chain ends with non-terminal ") + std::string(OpName(last))};
  return std::nullopt;
}

struct Record {
  std::string entity;
  std::string attribute;
  std::int64_t value;

  friend bool operator==(const Record&, const Record&) = default;
};

struct SyntheticContext {
  std::vector<Record> records;

  bool has_entity(std::string_view entity) const {
    return std::any_of(records.begin(), records.end(),
                       [&](const Record& r) { return r.entity == entity; });
  }
};

// Executes a validated chain against a context. Reports an invalid chain as
// InvalidChain, a missing entity as EntityAbsent, and a pool that empties
// before a MAXIMUM/MINIMUM as ArityUnderflow.
inline std::int64_t ExecuteChainValue(const ReasoningChain& chain, const SyntheticContext& context,
                                      std::string_view entity) {
  if (auto v = ValidateChain(chain))
    Fail(ErrorCode::kInvalidChain, std::string(ViolationName(v->kind)) + ": " + v->detail);
  if (!context.has_entity(entity)) Fail(ErrorCode::kEntityAbsent, "entity '" + std::string(entity) + "'");

  std::vector<const Record*> pool;
  std::vector<std::int64_t> acc;
  std::int64_t last_popped = 0;
  for (const auto& step : chain.steps()) {
    switch (step.kind) {
      case OpKind::kSelect:
        for (const auto& r : context.records)
          if (r.entity == entity) pool.push_back(&r);
        break;
      case OpKind::kFilterEq:
        std::erase_if(pool, [&](const Record* r) { return r->attribute != step.param; });
        break;
      case OpKind::kMaximum:
      case OpKind::kMinimum: {
        if (pool.empty())
          Fail(ErrorCode::kArityUnderflow, std::string(OpName(step.kind)) + " on an empty pool");
        auto cmp = [](const Record* a, const Record* b) { return a->value < b->value; };
        auto it = step.kind == OpKind::kMaximum ? std::max_element(pool.begin(), pool.end(), cmp)
                                                : std::min_element(pool.begin(), pool.end(), cmp);
        last_popped = (*it)->value;
        acc.push_back(last_popped);
        pool.erase(it);
        break;
      }
      case OpKind::kList:
        break;
      case OpKind::kSum: {
        std::int64_t total = 0;
        for (auto v : acc) total += v;
        return total;
      }
      case OpKind::kCount:
        return static_cast<std::int64_t>(pool.size());
      case OpKind::kDifference:
        return acc[0] - acc[1];
    }
  }
  return last_popped;
}

inline std::string ExecuteChain(const ReasoningChain& chain, const SyntheticContext& context,
                                std::string_view entity) {
  return std::to_string(ExecuteChainValue(chain, context, entity));
}

}  // namespace coat::taskgen
