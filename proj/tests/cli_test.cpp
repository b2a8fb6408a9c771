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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "coat/dataset.hpp"
#include "coat/evalharness/harness.hpp"

namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("coat_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    smoke_ = std::string(COAT_SOURCE_DIR) + "/configs/smoke.json";
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun Coat(const std::string& args) {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" + COAT_CLI_PATH + "' " + args + " >'" + out.string() +
                            "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, coat::ReadFile(out.string()), coat::ReadFile(err.string())};
  }

  std::string File(const std::string& rel) { return coat::ReadFile((dir_ / rel).string()); }

  std::string WriteConfig(const std::string& name, const std::function<void(coat::Json&)>& edit) {
    auto j = coat::Json::parse(coat::ReadFile(smoke_));
    edit(j);
    coat::WriteFile((dir_ / name).string(), j.dump(2));
    return name;
  }

  fs::path dir_;
  std::string smoke_;
};

TEST_F(CliTest, GenerateIsReproducible) {
  ASSERT_EQ(Coat("generate --config " + smoke_ + " --out a.jsonl").code, 0);
  ASSERT_EQ(Coat("generate --config " + smoke_ + " --out b.jsonl").code, 0);
  EXPECT_EQ(File("a.jsonl"), File("b.jsonl"));
  EXPECT_EQ(File("a.jsonl.meta.json"), File("b.jsonl.meta.json"));
  ASSERT_EQ(Coat("generate --config " + smoke_ + " --seed 8 --out c.jsonl").code, 0);
  EXPECT_NE(File("a.jsonl"), File("c.jsonl"));
  EXPECT_NE(File("a.jsonl.meta.json"), File("c.jsonl.meta.json"));
}

TEST_F(CliTest, SeedIsMandatory) {
  auto cfg = WriteConfig("noseed.json", [](coat::Json& j) { j.erase("seed"); });
  auto r = Coat("generate --config " + cfg + " --out d.jsonl");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--seed"), std::string::npos) << r.err;
  EXPECT_EQ(Coat("generate --config " + cfg + " --seed 3 --out d.jsonl").code, 0);
}

TEST_F(CliTest, CoatWithoutScorerIsUsageError) {
  auto cfg = WriteConfig("noscorer.json", [](coat::Json& j) { j.erase("scorer"); });
  ASSERT_EQ(Coat("generate --config " + cfg).code, 0);
  auto r = Coat("select --config " + cfg + " --strategy coat");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--scorer"), std::string::npos) << r.err;
  EXPECT_EQ(Coat("select --config " + cfg + " --strategy random").code, 0);
  EXPECT_EQ(Coat("select --config " + cfg + " --strategy coat --scorer uniform").code, 0);
}

TEST_F(CliTest, BadFlagsAreUsageErrors) {
  EXPECT_EQ(Coat("select --config " + smoke_ + " --strategy best").code, 1);
  EXPECT_EQ(Coat("eval --config " + smoke_ + " --metric bleu").code, 1);
  EXPECT_EQ(Coat("frobnicate").code, 1);
  EXPECT_EQ(Coat("").code, 1);
}

TEST_F(CliTest, SmokePipeline) {
  ASSERT_EQ(Coat("generate --config " + smoke_).code, 0);
  auto sel = Coat("select --config " + smoke_);
  ASSERT_EQ(sel.code, 0) << sel.err;
  const std::string prompts = File("smoke/prompts.jsonl");
  ASSERT_EQ(Coat("select --config " + smoke_ + " --workers 1 --out again.jsonl").code, 0);
  EXPECT_EQ(File("again.jsonl"), prompts);
  auto tr = Coat("train --config " + smoke_);
  ASSERT_EQ(tr.code, 0) << tr.err;
  EXPECT_EQ(File("smoke/model.ckpt.json.loss.csv").substr(0, 25), "step,train_loss,eval_loss");
  auto ev = Coat("eval --config " + smoke_);
  ASSERT_EQ(ev.code, 0) << ev.err;

  auto reports = coat::evalharness::ReportsFromCsv(File("smoke/reports/reports.csv"));
  ASSERT_EQ(reports.size(), 2u);
  for (const auto& r : reports) {
    EXPECT_GT(r.n, 0u);
    EXPECT_LE(r.ci_lo, r.mean);
    EXPECT_LE(r.mean, r.ci_hi);
  }
  EXPECT_EQ(reports[0].task, "smoke/concept");
  EXPECT_FALSE(File("smoke/reports/predictions.jsonl").empty());
  EXPECT_NE(File("smoke/reports/summary.md").find("concept gain"), std::string::npos);

  auto cmp = Coat("compare --a smoke/reports/reports.csv --b smoke/reports/reports.csv");
  EXPECT_EQ(cmp.code, 0);
  EXPECT_NE(cmp.out.find("similar=2"), std::string::npos) << cmp.out;
}

TEST_F(CliTest, DigestMismatchIsRejected) {
  ASSERT_EQ(Coat("generate --config " + smoke_).code, 0);
  auto r = Coat("select --config " + smoke_ + " --seed 99");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("DigestMismatch"), std::string::npos) << r.err;
}

TEST_F(CliTest, ScorePrintsLikelihoods) {
  auto r = Coat("score --config " + smoke_ + " --scorer uniform --prompt 'Input: a Prediction: ' --target '4 2'");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = coat::Json::parse(r.out);
  EXPECT_EQ(j.at("probs").size(), 2u);
  EXPECT_DOUBLE_EQ(j.at("mean_prob").get<double>(), 0.5);
  EXPECT_EQ(Coat("score --config " + smoke_ + " --scorer uniform --prompt x").code, 1);
}

TEST_F(CliTest, RuntimeErrorsNameTheError) {
  auto r = Coat("train --config " + smoke_ + " --prompts missing.jsonl --dataset missing.jsonl");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("IoError"), std::string::npos) << r.err;
}

}  // namespace
