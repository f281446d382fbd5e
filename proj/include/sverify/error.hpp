// Copyright (c) 2026 The sverify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace sverify {

enum class ErrorCode {
  kZeroVector,
  kEmptyList,
  kEmptyInput,
  kDimensionMismatch,
  kOutOfRange,
  kTooShort,
  kMissingEmbedding,
  kMissingCmf,
  kTopKTooLarge,
  kDegenerateStd,
  kSingleClass,
  kNonFiniteLoss,
  kInsufficientSpeakers,
  kEmptyBucket,
  kNonpositiveDuration,
  kTrialMismatch,
  kAllZeroWeights,
  kInvalidSpec,
  kRangeOutOfBounds,
  kBadMagic,
  kTruncatedFile,
  kDuplicateId,
  kIoError,
  kParseError,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kEmptyList: return "EmptyList";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kMissingCmf: return "MissingCmf";
    case ErrorCode::kTopKTooLarge: return "TopKTooLarge";
    case ErrorCode::kDegenerateStd: return "DegenerateStd";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kInsufficientSpeakers: return "InsufficientSpeakers";
    case ErrorCode::kEmptyBucket: return "EmptyBucket";
    case ErrorCode::kNonpositiveDuration: return "NonpositiveDuration";
    case ErrorCode::kTrialMismatch: return "TrialMismatch";
    case ErrorCode::kAllZeroWeights: return "AllZeroWeights";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kRangeOutOfBounds: return "RangeOutOfBounds";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code. All failure modes of
/// the library surface as this type; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sverify
