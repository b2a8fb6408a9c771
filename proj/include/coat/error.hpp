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

#include <stdexcept>
#include <string>
#include <string_view>

namespace coat {

// Error kinds raised by the toolkit. The CLI reports these names verbatim.
enum class ErrorCode {
  kConfigInvalid,
  kEntityAbsent,
  kArityUnderflow,
  kInvalidChain,
  kEmptyQuestion,
  kDatasetInvalid,
  kConceptUnderpopulated,
  kInsufficientSamples,
  kScorerFailure,
  kLookupMiss,
  kRemoteUnavailable,
  kRemoteMalformed,
  kTagCollision,
  kMalformedPrompt,
  kStyleInvalid,
  kContextOverflow,
  kEmptyTarget,
  kDivergenceDetected,
  kCheckpointInvalid,
  kEmptyEvalSet,
  kLabelSpaceTooLarge,
  kNoDerangement,
  kTaskSetMismatch,
  kMetricMismatch,
  kDigestMismatch,
  kIoError,
};

constexpr std::string_view ErrorName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kEntityAbsent: return "EntityAbsent";
    case ErrorCode::kArityUnderflow: return "ArityUnderflow";
    case ErrorCode::kInvalidChain: return "InvalidChain";
    case ErrorCode::kEmptyQuestion: return "EmptyQuestion";
    case ErrorCode::kDatasetInvalid: return "DatasetInvalid";
    case ErrorCode::kConceptUnderpopulated: return "ConceptUnderpopulated";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kScorerFailure: return "ScorerFailure";
    case ErrorCode::kLookupMiss: return "LookupMiss";
    case ErrorCode::kRemoteUnavailable: return "RemoteUnavailable";
    case ErrorCode::kRemoteMalformed: return "RemoteMalformed";
    case ErrorCode::kTagCollision: return "TagCollision";
    case ErrorCode::kMalformedPrompt: return "MalformedPrompt";
    case ErrorCode::kStyleInvalid: return "StyleInvalid";
    case ErrorCode::kContextOverflow: return "ContextOverflow";
    case ErrorCode::kEmptyTarget: return "EmptyTarget";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kCheckpointInvalid: return "CheckpointInvalid";
    case ErrorCode::kEmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::kLabelSpaceTooLarge: return "LabelSpaceTooLarge";
    case ErrorCode::kNoDerangement: return "NoDerangement";
    case ErrorCode::kTaskSetMismatch: return "TaskSetMismatch";
    case ErrorCode::kMetricMismatch: return "MetricMismatch";
    case ErrorCode::kDigestMismatch: return "DigestMismatch";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace coat
