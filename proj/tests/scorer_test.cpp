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

#include <atomic>
#include <cmath>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "coat/remote_scorer.hpp"
#include "coat/scorer.hpp"

namespace coat {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIoError;
}

TEST(TokenLikelihoods, Aggregates) {
  auto t = TokenLikelihoods::FromProbs({"a", "b"}, {0.2, 0.8});
  EXPECT_DOUBLE_EQ(t.mean_prob, 0.5);
  EXPECT_NEAR(t.geometric_mean(), 0.4, 1e-12);
  EXPECT_EQ(CodeOf([] { TokenLikelihoods::FromProbs({}, {}); }), ErrorCode::kEmptyTarget);
  EXPECT_EQ(CodeOf([] { TokenLikelihoods::FromProbs({"a"}, {0.1, 0.2}); }), ErrorCode::kScorerFailure);
}

TEST(UniformScorer, ConstantPerToken) {
  UniformScorer s(0.25);
  auto t = s.Score("anything", "three word target");
  EXPECT_EQ(t.probs, (std::vector<double>{0.25, 0.25, 0.25}));
  EXPECT_EQ(CodeOf([&] { s.Score("p", " "); }), ErrorCode::kEmptyTarget);
  EXPECT_EQ(CodeOf([] { UniformScorer(0.0); }), ErrorCode::kConfigInvalid);
}

TEST(LookupScorer, TableAndMisses) {
  auto s = LookupScorer::FromJson(
      nlohmann::json::parse(R"({"entries":[{"prompt":"p1","target":"a b","probs":[0.5,0.25]}]})"));
  EXPECT_DOUBLE_EQ(s.Score("p1", "a b").mean_prob, 0.375);
  EXPECT_EQ(CodeOf([&] { s.Score("p2", "a b"); }), ErrorCode::kLookupMiss);
}

// In-process stand-in for the scoring service.
class StubServer {
 public:
  StubServer() {
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      ++score_calls_;
      auth_ = req.get_header_value("Authorization");
      if (fail_first_ > 0) {
        --fail_first_;
        res.status = 503;
        return;
      }
      auto j = nlohmann::json::parse(req.body);
      if (!malformed_.empty()) {
        res.set_content(malformed_, "application/json");
        return;
      }
      if (status_ != 200) {
        res.status = status_;
        return;
      }
      std::vector<std::string> tokens;
      std::vector<double> logprobs;
      for (const auto& w : text::SplitWhitespace(j.at("target").get<std::string>())) {
        tokens.push_back(w);
        logprobs.push_back(std::log(0.5));
      }
      nlohmann::json out = {{"tokens", tokens}, {"logprobs", logprobs}};
      res.set_content(out.dump(), "application/json");
    });
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok","model":"stub-1"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  RemoteScorerConfig config() const {
    RemoteScorerConfig c;
    c.endpoint = endpoint();
    c.timeout_ms = 2000;
    c.backoff_ms = 1;
    return c;
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> score_calls_{0};
  std::atomic<int> fail_first_{0};
  int status_ = 200;
  std::string malformed_;
  std::string auth_;
};

TEST(RemoteScorer, ScoresAndReportsHealth) {
  StubServer stub;
  auto cfg = stub.config();
  cfg.bearer_token = "secret";
  RemoteScorer s(cfg);
  auto t = s.Score("Input: x Prediction: ", "12 7");
  EXPECT_EQ(t.tokens, (std::vector<std::string>{"12", "7"}));
  EXPECT_NEAR(t.mean_prob, 0.5, 1e-12);
  EXPECT_EQ(stub.auth_, "Bearer secret");
  EXPECT_EQ(s.Health(), "stub-1");
}

TEST(RemoteScorer, RetriesServerErrors) {
  StubServer stub;
  stub.fail_first_ = 2;
  RemoteScorer s(stub.config());
  EXPECT_NEAR(s.Score("p", "a").mean_prob, 0.5, 1e-12);
  EXPECT_EQ(stub.score_calls_.load(), 3);

  stub.fail_first_ = 5;
  stub.score_calls_ = 0;
  EXPECT_EQ(CodeOf([&] { s.Score("p", "a"); }), ErrorCode::kRemoteUnavailable);
  EXPECT_EQ(stub.score_calls_.load(), 3);
}

TEST(RemoteScorer, MalformedResponses) {
  StubServer stub;
  RemoteScorer s(stub.config());
  for (const char* body : {R"({"tokens":["a"]})", R"({"tokens":["a","b"],"logprobs":[-1]})",
                           R"({"tokens":["a"],"logprobs":[0.5]})", R"({"tokens":[],"logprobs":[]})", "not json"}) {
    stub.malformed_ = body;
    EXPECT_EQ(CodeOf([&] { s.Score("p", "a"); }), ErrorCode::kRemoteMalformed) << body;
  }
  stub.malformed_.clear();
  stub.status_ = 400;
  EXPECT_EQ(CodeOf([&] { s.Score("p", "a"); }), ErrorCode::kRemoteMalformed);
}

TEST(RemoteScorer, UnreachableBackend) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteScorerConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.timeout_ms = 500;
  cfg.retries = 1;
  cfg.backoff_ms = 1;
  RemoteScorer s(cfg);
  EXPECT_EQ(CodeOf([&] { s.Score("p", "a"); }), ErrorCode::kRemoteUnavailable);
  EXPECT_EQ(CodeOf([&] { s.Health(); }), ErrorCode::kRemoteUnavailable);
  EXPECT_EQ(CodeOf([] { RemoteScorer(RemoteScorerConfig{}); }), ErrorCode::kConfigInvalid);
}

TEST(RemoteScorer, ConcurrentRequests) {
  StubServer stub;
  auto cfg = stub.config();
  cfg.pool_size = 2;
  RemoteScorer s(cfg);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&] {
      if (s.Score("p", "a b").probs.size() == 2) ++ok;
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 8);
}

}  // namespace
}  // namespace coat
