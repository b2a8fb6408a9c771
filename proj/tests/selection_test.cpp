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

#include <set>

#include <gtest/gtest.h>

#include "coat/selection.hpp"
#include "coat/taskgen/generator.hpp"
#include "selection_oracle.hpp"

namespace coat::selection {
namespace {

QASample Make(std::string id, std::string concept_key, std::string answer = "1", Split split = Split::kTrain) {
  QASample s;
  s.id = std::move(id);
  s.question = "q " + s.id;
  s.context = "line a\nline b";
  s.answer = std::move(answer);
  s.concept_key = std::move(concept_key);
  s.split = split;
  return s;
}

Dataset Small() {
  return {Make("s1", "A"), Make("s2", "A"), Make("s3", "A"), Make("s4", "B"), Make("s5", "B"), Make("s6", "C"),
          Make("e1", "A", "2", Split::kEval)};
}

TEST(IndexByConcept, GroupsSortedIds) {
  Dataset d = {Make("z", "A"), Make("b", "B"), Make("a", "A")};
  auto index = IndexByConcept(d);
  EXPECT_EQ(index.members("A"), (std::vector<std::string>{"a", "z"}));
  EXPECT_EQ(index.concept_of("b"), "B");
  EXPECT_TRUE(index.members("missing").empty());
  EXPECT_EQ(index.size(), 3u);
  d.push_back(Make("a", "C"));
  EXPECT_THROW(IndexByConcept(d), Error);
}

TEST(IndexByConcept, CustomExtractor) {
  Dataset d = {Make("1", "x"), Make("2", "y")};
  d[0].question = "Who is it";
  d[1].question = "who was it";
  auto index = IndexByConcept(d, [](const QASample& s) { return taskgen::InitialWordConcept(s.question); });
  EXPECT_EQ(index.members("who").size(), 2u);
}

TEST(InformativeCandidates, ExcludesSelfAndCaps) {
  Dataset d;
  for (int i = 0; i < 30; ++i) d.push_back(Make("s" + std::to_string(100 + i), "A"));
  auto index = IndexByConcept(d);
  Rng rng(1);
  auto c = InformativeCandidates(index, d[0], 20, rng);
  EXPECT_EQ(c.size(), 20u);
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
  EXPECT_EQ(std::count(c.begin(), c.end(), d[0].id), 0);
  Rng rng2(1);
  EXPECT_EQ(InformativeCandidates(index, d[0], 20, rng2), c);
  Rng rng3(1);
  EXPECT_EQ(InformativeCandidates(index, d[0], 100, rng3).size(), 29u);
}

TEST(InformativeCandidates, UnderpopulatedConcept) {
  auto d = Small();
  auto index = IndexByConcept(d);
  Rng rng(0);
  try {
    InformativeCandidates(index, d[5], 20, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConceptUnderpopulated);
  }
}

TEST(NontrivialSelect, PicksLowestLikelihoodDemos) {
  // Probability of the target depends on which demo ids appear in the prompt.
  FunctionScorer scorer([](std::string_view prompt, std::string_view) {
    double p = 0.9;
    if (prompt.find("q c2") != std::string_view::npos) p -= 0.5;
    if (prompt.find("q c4") != std::string_view::npos) p -= 0.3;
    return std::vector<double>{p};
  });
  auto target = Make("t", "A", "7");
  std::vector<Demo> cands;
  for (const char* id : {"c1", "c2", "c3", "c4"}) cands.push_back(DemoFromSample(Make(id, "A")));
  auto chosen = NontrivialSelect(cands, target, 2, scorer, {});
  ASSERT_EQ(chosen.size(), 2u);
  EXPECT_EQ(chosen[0].id, "c2");
  EXPECT_EQ(chosen[1].id, "c4");
}

TEST(NontrivialSelect, TiesGoToSmallestId) {
  UniformScorer flat(0.5);
  auto target = Make("t", "A");
  std::vector<Demo> cands;
  for (const char* id : {"c3", "c1", "c2"}) cands.push_back(DemoFromSample(Make(id, "A")));
  auto chosen = NontrivialSelect(cands, target, 3, flat, {});
  ASSERT_EQ(chosen.size(), 3u);
  EXPECT_EQ(chosen[0].id, "c1");
  EXPECT_EQ(chosen[1].id, "c2");
  EXPECT_EQ(chosen[2].id, "c3");
}

TEST(NontrivialSelect, MatchesExhaustiveOracle) {
  promptfmt::PromptStyle style;
  for (std::uint64_t salt = 0; salt < 60; ++salt) {
    auto scorer = oracle::HashScorer(salt);
    Rng rng(salt);
    std::vector<Demo> cands;
    const auto n = UniformInt(rng, 1, 9);
    for (std::int64_t i = 0; i < n; ++i) cands.push_back(DemoFromSample(Make("c" + std::to_string(i), "A", "4 2")));
    auto target = Make("t", "A", "3 1");
    const auto k = static_cast<std::size_t>(UniformInt(rng, 1, 8));
    auto chosen = NontrivialSelect(cands, target, k, scorer, style);
    EXPECT_EQ(oracle::CheckGreedy(cands, target.id, SampleInput(target), target.answer, k, chosen, scorer, style), "")
        << "salt " << salt;
  }
}

TEST(NontrivialSelect, GeometricAggregation) {
  // d1: arithmetic 0.425, geometric 0.2. d2: 0.3 under both.
  FunctionScorer scorer([](std::string_view prompt, std::string_view) {
    if (prompt.find("q d1") != std::string_view::npos) return std::vector<double>{0.8, 0.05};
    return std::vector<double>{0.3, 0.3};
  });
  auto target = Make("t", "A", "a b");
  std::vector<Demo> cands = {DemoFromSample(Make("d1", "A")), DemoFromSample(Make("d2", "A"))};
  EXPECT_EQ(NontrivialSelect(cands, target, 1, scorer, {}, Aggregation::kArithmetic)[0].id, "d2");
  EXPECT_EQ(NontrivialSelect(cands, target, 1, scorer, {}, Aggregation::kGeometric)[0].id, "d1");
}

TEST(NontrivialSelect, PropagatesScorerErrors) {
  LookupScorer empty;
  auto target = Make("t", "A");
  std::vector<Demo> cands = {DemoFromSample(Make("d1", "A"))};
  try {
    NontrivialSelect(cands, target, 1, empty, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLookupMiss);
  }
  FunctionScorer broken([](std::string_view, std::string_view) -> std::vector<double> {
    throw std::runtime_error("backend down");
  });
  try {
    NontrivialSelect(cands, target, 1, broken, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScorerFailure);
  }
}

TEST(RandomSelect, ExcludesTargetAndChecksSize) {
  auto d = Small();
  Rng rng(3);
  auto demos = RandomSelect(d, d[0], 6, rng);
  std::set<std::string> ids;
  for (const auto& x : demos) ids.insert(x.id);
  EXPECT_EQ(ids.size(), 6u);
  EXPECT_FALSE(ids.count("s1"));
  try {
    RandomSelect(d, d[0], 7, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientSamples);
  }
}

TEST(BuildTrainingPrompts, StrategiesRespectConceptsAndSplit) {
  auto d = Small();
  UniformScorer scorer(0.5);
  for (auto strategy : {DemoStrategy::kRandom, DemoStrategy::kInfoOnly, DemoStrategy::kCoat}) {
    SelectionConfig cfg;
    cfg.strategy = strategy;
    cfg.k_min = 1;
    cfg.k_max = 2;
    cfg.seed = 9;
    auto set = BuildTrainingPrompts(d, cfg, &scorer);
    for (const auto& p : set.prompts) {
      EXPECT_NE(p.id, "e1");
      EXPECT_GE(p.k(), 1u);
      EXPECT_LE(p.k(), 2u);
      for (const auto& demo : p.demos) {
        EXPECT_NE(demo.id, p.id);
        EXPECT_NE(demo.id, "e1");
        if (strategy != DemoStrategy::kRandom) {
          EXPECT_EQ(demo.id[1] <= '3', p.id[1] <= '3') << p.id << " " << demo.id;
        }
      }
    }
    if (strategy == DemoStrategy::kRandom) {
      EXPECT_EQ(set.prompts.size(), 6u);
    } else {
      EXPECT_EQ(set.prompts.size(), 5u);
      EXPECT_EQ(set.skipped, 1u);
      EXPECT_EQ(set.reasons.at("ConceptUnderpopulated"), 1u);
    }
  }
}

TEST(BuildTrainingPrompts, CoatNeedsScorer) {
  SelectionConfig cfg;
  try {
    BuildTrainingPrompts(Small(), cfg, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigInvalid);
  }
}

TEST(BuildTrainingPrompts, DeterministicAcrossWorkerCounts) {
  taskgen::DatasetConfig gcfg;
  gcfg.n_chains = 6;
  gcfg.samples_per_chain = 8;
  gcfg.seed = 4;
  auto data = taskgen::GenerateDataset(gcfg).dataset();
  auto scorer = oracle::HashScorer(2);
  SelectionConfig cfg;
  cfg.seed = 5;
  cfg.workers = 1;
  auto one = WritePromptsJsonl(BuildTrainingPrompts(data, cfg, &scorer).prompts);
  cfg.workers = 4;
  auto four = WritePromptsJsonl(BuildTrainingPrompts(data, cfg, &scorer).prompts);
  EXPECT_EQ(one, four);
  cfg.seed = 6;
  EXPECT_NE(one, WritePromptsJsonl(BuildTrainingPrompts(data, cfg, &scorer).prompts));
}

TEST(PromptJson, RoundTrip) {
  PromptSpec p;
  p.id = "c000-00001";
  p.strategy = DemoStrategy::kCoat;
  p.concept_key = "select->count";
  p.demos = {{"x1", "y1", ""}, {"x2", "y2", ""}};
  p.x_pred = "xp";
  p.y_pred = "yp";
  auto back = ReadPromptsJsonl(WritePromptsJsonl({p}));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].demos, p.demos);
  EXPECT_EQ(back[0].strategy, p.strategy);
  EXPECT_EQ(back[0].concept_key, p.concept_key);
  EXPECT_EQ(PromptToJson(p).dump(), PromptToJson(back[0]).dump());
  EXPECT_THROW(ReadPromptsJsonl(R"({"id":"a","strategy":"coat","k":3,"demos":[],"x_pred":"","y_pred":""})"), Error);
}

}  // namespace
}  // namespace coat::selection
