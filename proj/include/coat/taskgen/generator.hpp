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
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coat/dataset.hpp"
#include "coat/error.hpp"
#include "coat/rng.hpp"
#include "coat/taskgen/chain.hpp"
#include "coat/taskgen/templates.hpp"
#include "coat/text.hpp"

namespace coat::taskgen {

struct IntRange {
  std::int64_t lo;
  std::int64_t hi;
};

struct DatasetConfig {
  std::size_t n_chains = 10;
  std::size_t samples_per_chain = 20;
  double heldout_chain_fraction = 0.2;
  IntRange value_range{0, 99};
  std::vector<std::string> entity_vocabulary{
      "bell 212",  "monte vesuvio", "pentagon",   "s-50",      "red hawks",
      "blue jays", "river city",    "north star", "iron men",  "golden bears"};
  std::vector<std::string> attributes{"scores of games"};
  IntRange target_records{2, 6};
  IntRange distractor_entities{1, 3};
  IntRange distractor_records{1, 3};
  std::size_t max_chain_length = 6;
  std::uint64_t seed = 0;
  TemplateRegistry templates = TemplateRegistry::Default();
};

// A generated sample together with the bound chain and structured context it
// was derived from.
struct GeneratedSample {
  QASample sample;
  ReasoningChain chain;
  SyntheticContext context;
  std::string entity;
};

struct GeneratedDataset {
  std::vector<GeneratedSample> samples;
  std::vector<std::string> train_keys;
  std::vector<std::string> eval_keys;

  Dataset dataset() const {
    Dataset out;
    out.reserve(samples.size());
    for (const auto& g : samples) out.push_back(g.sample);
    return out;
  }
};

// Canonical (non-redundant) chain shapes up to max_len steps, in a fixed
// order: select, an optional filter, max/min pops separated by list, and a
// terminal. Shapes that merely alias another (a lone list after select, a
// sum over one pop) are not produced.
inline std::vector<ReasoningChain> EnumerateCanonicalChains(std::size_t max_len) {
  std::vector<ReasoningChain> out;
  auto emit = [&](std::vector<OpKind> kinds) {
    if (kinds.size() <= max_len) out.push_back(ReasoningChain::FromKinds(kinds));
  };
  for (int filter = 0; filter <= 1; ++filter) {
    std::vector<OpKind> head{OpKind::kSelect};
    if (filter) head.push_back(OpKind::kFilterEq);
    emit([&] { auto k = head; k.push_back(OpKind::kCount); return k; }());
    for (std::size_t pops = 1; 2 * pops + head.size() - 1 <= max_len; ++pops) {
      for (std::size_t mask = 0; mask < (std::size_t{1} << pops); ++mask) {
        std::vector<OpKind> body = head;
        for (std::size_t p = 0; p < pops; ++p) {
          if (p) body.push_back(OpKind::kList);
          body.push_back((mask >> p) & 1 ? OpKind::kMinimum : OpKind::kMaximum);
        }
        emit(body);
        if (pops >= 2) {
          emit([&] { auto k = body; k.push_back(OpKind::kSum); return k; }());
          emit([&] { auto k = body; k.push_back(OpKind::kDifference); return k; }());
        }
        emit([&] { auto k = body; k.push_back(OpKind::kList); k.push_back(OpKind::kCount); return k; }());
      }
    }
  }
  return out;
}

inline std::string RenderRecord(const Record& r) {
  return r.attribute + " of " + r.entity + ". " + std::to_string(r.value);
}

inline std::string RenderContext(const SyntheticContext& context) {
  std::vector<std::string> lines;
  for (const auto& r : context.records) lines.push_back(RenderRecord(r));
  return text::Join(lines, "\n");
}

// Inverse of RenderContext for entity names without " of " or ". ".
inline SyntheticContext ParseContext(std::string_view rendered) {
  SyntheticContext ctx;
  if (rendered.empty()) return ctx;
  for (const auto& line : text::Split(rendered, "\n")) {
    auto dot = line.rfind(". ");
    if (dot == std::string::npos) Fail(ErrorCode::kDatasetInvalid, "bad context line '" + line + "'");
    std::string head = line.substr(0, dot);
    auto of = head.rfind(" of ");
    if (of == std::string::npos) Fail(ErrorCode::kDatasetInvalid, "bad context line '" + line + "'");
    Record r;
    r.attribute = head.substr(0, of);
    r.entity = head.substr(of + 4);
    try {
      r.value = std::stoll(line.substr(dot + 2));
    } catch (const std::exception&) {
      Fail(ErrorCode::kDatasetInvalid, "bad value in '" + line + "'");
    }
    ctx.records.push_back(std::move(r));
  }
  return ctx;
}

// Builds the question/context/answer surface of one sample. The chain's
// SELECT parameter names the target entity.
inline QASample RenderSample(const ReasoningChain& chain, const SyntheticContext& context,
                             std::string_view answer, Rng& rng,
                             const TemplateRegistry& templates = TemplateRegistry::Default()) {
  const std::string& entity = chain.steps().at(0).param;
  std::string attr;
  for (const auto& s : chain.steps())
    if (s.kind == OpKind::kFilterEq) attr = s.param;
  if (attr.empty()) {
    for (const auto& r : context.records)
      if (r.entity == entity) {
        attr = r.attribute;
        break;
      }
  }
  QASample s;
  if (const auto* family = templates.find(chain.key())) {
    const auto& tmpl = (*family)[static_cast<std::size_t>(
        UniformInt(rng, 0, static_cast<std::int64_t>(family->size()) - 1))];
    s.question = FillTemplate(tmpl, entity, attr);
  } else {
    s.question = GenericQuestion(chain, entity, attr);
  }
  s.context = RenderContext(context);
  s.answer = std::string(answer);
  s.concept_key = chain.key();
  return s;
}

// Lowercased first whitespace token of the question with non-alphanumeric
// characters removed.
inline std::string InitialWordConcept(std::string_view question) {
  auto words = text::SplitWhitespace(question);
  if (words.empty()) Fail(ErrorCode::kEmptyQuestion, "question is blank");
  std::string out;
  for (char c : words.front())
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

inline void ValidateConfig(const DatasetConfig& cfg) {
  auto bad = [](const std::string& m) { Fail(ErrorCode::kConfigInvalid, m); };
  if (cfg.entity_vocabulary.size() < 2) bad("entity_vocabulary needs at least 2 names");
  if (cfg.attributes.empty()) bad("attributes must be non-empty");
  if (cfg.value_range.lo >= cfg.value_range.hi) bad("value_range must satisfy lo < hi");
  if (cfg.n_chains == 0) bad("n_chains must be positive");
  if (cfg.samples_per_chain == 0) bad("samples_per_chain must be positive");
  if (!(cfg.heldout_chain_fraction >= 0.0 && cfg.heldout_chain_fraction < 1.0))
    bad("heldout_chain_fraction must lie in [0, 1)");
  if (cfg.target_records.lo < 1 || cfg.target_records.lo > cfg.target_records.hi) bad("target_records range");
  if (cfg.distractor_entities.lo < 1 || cfg.distractor_entities.lo > cfg.distractor_entities.hi)
    bad("distractor_entities range must start at 1 or more");
  if (static_cast<std::size_t>(cfg.distractor_entities.hi) + 1 > cfg.entity_vocabulary.size())
    bad("entity_vocabulary too small for the distractor count");
  if (cfg.distractor_records.lo < 1 || cfg.distractor_records.lo > cfg.distractor_records.hi)
    bad("distractor_records range");
  std::set<std::string> names;
  for (const auto& e : cfg.entity_vocabulary) {
    if (e.empty() || e.find(" of ") != std::string::npos || e.find(". ") != std::string::npos ||
        e.find('\n') != std::string::npos)
      bad("entity name '" + e + "' must be non-empty without ' of ', '. ' or newlines");
    if (!names.insert(e).second) bad("duplicate entity '" + e + "'");
  }
  for (const auto& a : cfg.attributes)
    if (a.empty() || a.find('\n') != std::string::npos || a.find(". ") != std::string::npos)
      bad("attribute '" + a + "' must be non-empty without '. ' or newlines");
}

// Number of held-out chain families for a config.
inline std::size_t HeldoutChainCount(const DatasetConfig& cfg) {
  auto n = static_cast<std::size_t>(std::llround(cfg.heldout_chain_fraction * static_cast<double>(cfg.n_chains)));
  if (cfg.heldout_chain_fraction > 0.0 && n == 0) n = 1;
  if (n >= cfg.n_chains) n = cfg.n_chains - 1;
  return n;
}

// Draws one (bound chain, context) instance of a chain shape.
inline GeneratedSample GenerateInstance(const ReasoningChain& shape, const DatasetConfig& cfg, Rng& rng) {
  auto pick = [&](const std::vector<std::string>& v) -> const std::string& {
    return v[static_cast<std::size_t>(UniformInt(rng, 0, static_cast<std::int64_t>(v.size()) - 1))];
  };
  auto value = [&] { return UniformInt(rng, cfg.value_range.lo, cfg.value_range.hi); };

  GeneratedSample g;
  g.chain = shape;
  std::vector<std::string> entities =
      SampleWithoutReplacement(cfg.entity_vocabulary,
                               static_cast<std::size_t>(UniformInt(rng, cfg.distractor_entities.lo,
                                                                   cfg.distractor_entities.hi)) + 1,
                               rng);
  g.entity = entities.front();

  std::string filter_attr;
  for (auto& step : g.chain.mutable_steps()) {
    if (step.kind == OpKind::kSelect) step.param = g.entity;
    if (step.kind == OpKind::kFilterEq) {
      if (filter_attr.empty()) filter_attr = pick(cfg.attributes);
      step.param = filter_attr;
    }
  }

  const auto need = static_cast<std::int64_t>(std::max<std::size_t>(2, shape.pops()));
  const std::int64_t lo = std::max(cfg.target_records.lo, need);
  const std::int64_t n_target = UniformInt(rng, lo, std::max(lo, cfg.target_records.hi));
  auto& records = g.context.records;
  for (std::int64_t i = 0; i < n_target; ++i) {
    const std::string& attr = (!filter_attr.empty() && i < need) ? filter_attr : pick(cfg.attributes);
    records.push_back({g.entity, attr, value()});
  }
  for (std::size_t d = 1; d < entities.size(); ++d) {
    const std::int64_t n = UniformInt(rng, cfg.distractor_records.lo, cfg.distractor_records.hi);
    for (std::int64_t i = 0; i < n; ++i) records.push_back({entities[d], pick(cfg.attributes), value()});
  }
  for (std::size_t i = records.size(); i > 1; --i)
    std::swap(records[i - 1], records[static_cast<std::size_t>(UniformInt(rng, 0, static_cast<std::int64_t>(i) - 1))]);

  const std::string answer = ExecuteChain(g.chain, g.context, g.entity);
  g.sample = RenderSample(g.chain, g.context, answer, rng, cfg.templates);
  return g;
}

inline GeneratedDataset GenerateDataset(const DatasetConfig& cfg) {
  ValidateConfig(cfg);
  auto shapes = EnumerateCanonicalChains(cfg.max_chain_length);
  if (shapes.size() < cfg.n_chains)
    Fail(ErrorCode::kConfigInvalid, "n_chains=" + std::to_string(cfg.n_chains) + " exceeds the " +
                                        std::to_string(shapes.size()) + " chain shapes of length <= " +
                                        std::to_string(cfg.max_chain_length));
  Rng shape_rng = DeriveRng(cfg.seed, {0});
  shapes = SampleWithoutReplacement(std::move(shapes), cfg.n_chains, shape_rng);
  const std::size_t n_eval = HeldoutChainCount(cfg);
  const std::size_t n_train = cfg.n_chains - n_eval;

  GeneratedDataset out;
  for (std::size_t c = 0; c < shapes.size(); ++c) {
    const bool heldout = c >= n_train;
    (heldout ? out.eval_keys : out.train_keys).push_back(shapes[c].key());
    for (std::size_t i = 0; i < cfg.samples_per_chain; ++i) {
      Rng rng = DeriveRng(cfg.seed, {1, c, i});
      GeneratedSample g = GenerateInstance(shapes[c], cfg, rng);
      char id[32];
      std::snprintf(id, sizeof id, "c%03zu-%05zu", c, i);
      g.sample.id = id;
      g.sample.split = heldout ? Split::kEval : Split::kTrain;
      out.samples.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace coat::taskgen
