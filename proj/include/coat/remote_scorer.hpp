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

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "coat/error.hpp"
#include "coat/scorer.hpp"

namespace coat {

struct RemoteScorerConfig {
  std::string endpoint;  // scheme://host:port, e.g. http://127.0.0.1:8080
  int timeout_ms = 30000;
  int retries = 2;
  int backoff_ms = 100;  // doubled after every failed attempt
  int pool_size = 4;     // max in-flight requests
  std::string bearer_token;

  // Bearer token from COAT_SCORER_TOKEN when not set explicitly.
  static std::string TokenFromEnv() {
    const char* t = std::getenv("COAT_SCORER_TOKEN");
    return t ? std::string(t) : std::string();
  }
};

// Client for the scoring service wire protocol:
//   POST /score {"prompt": str, "target": str}
//     -> 200 {"tokens": [str], "logprobs": [float]}
//   GET /health -> 200 {"status": "ok", "model": str}
// The backend owns tokenization; the client only exponentiates and averages.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(RemoteScorerConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty()) Fail(ErrorCode::kConfigInvalid, "remote scorer needs an endpoint");
    if (cfg_.pool_size < 1) cfg_.pool_size = 1;
  }

  TokenLikelihoods Score(std::string_view prompt, std::string_view target) const override {
    if (target.empty()) Fail(ErrorCode::kEmptyTarget, "empty target");
    nlohmann::json body = {{"prompt", std::string(prompt)}, {"target", std::string(target)}};
    const std::string response = Request("POST", "/score", body.dump());
    return ParseScoreResponse(response);
  }

  // Returns the backend's model id.
  std::string Health() const {
    const std::string response = Request("GET", "/health", {});
    try {
      auto j = nlohmann::json::parse(response);
      if (j.at("status") != "ok") Fail(ErrorCode::kRemoteUnavailable, "backend status " + j.at("status").dump());
      return j.at("model").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kRemoteMalformed, std::string("health response: ") + e.what());
    }
  }

  static TokenLikelihoods ParseScoreResponse(std::string_view response) {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;
    try {
      auto j = nlohmann::json::parse(response);
      tokens = j.at("tokens").get<std::vector<std::string>>();
      logprobs = j.at("logprobs").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kRemoteMalformed, std::string("score response: ") + e.what());
    }
    if (tokens.empty() || tokens.size() != logprobs.size())
      Fail(ErrorCode::kRemoteMalformed, "tokens and logprobs must be non-empty with equal lengths");
    std::vector<double> probs;
    probs.reserve(logprobs.size());
    for (double lp : logprobs) {
      if (!std::isfinite(lp) || lp > 0.0) Fail(ErrorCode::kRemoteMalformed, "logprob outside (-inf, 0]");
      probs.push_back(std::exp(lp));
    }
    return TokenLikelihoods::FromProbs(std::move(tokens), std::move(probs));
  }

  std::string name() const override { return "remote"; }

 private:
  class Slot {
   public:
    explicit Slot(const RemoteScorer& s) : s_(s) {
      std::unique_lock lock(s_.mu_);
      s_.cv_.wait(lock, [&] { return s_.in_flight_ < s_.cfg_.pool_size; });
      ++s_.in_flight_;
    }
    ~Slot() {
      {
        std::lock_guard lock(s_.mu_);
        --s_.in_flight_;
      }
      s_.cv_.notify_one();
    }

   private:
    const RemoteScorer& s_;
  };

  std::string Request(const std::string& method, const std::string& path, const std::string& body) const {
    Slot slot(*this);
    std::string last_error;
    int backoff = cfg_.backoff_ms;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff *= 2;
      }
      httplib::Client client(cfg_.endpoint);
      const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      httplib::Headers headers;
      if (!cfg_.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.bearer_token);
      auto res = method == "POST" ? client.Post(path, headers, body, "application/json") : client.Get(path, headers);
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) return res->body;
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      Fail(ErrorCode::kRemoteMalformed, path + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    Fail(ErrorCode::kRemoteUnavailable,
         path + " failed after " + std::to_string(cfg_.retries + 1) + " attempts: " + last_error);
  }

  RemoteScorerConfig cfg_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  mutable int in_flight_ = 0;
};

}  // namespace coat
