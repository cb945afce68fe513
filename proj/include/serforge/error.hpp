/* Copyright 2026 The serforge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SERFORGE_ERROR_HPP_
#define SERFORGE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace serforge {

enum class ErrorCode {
  kUnsupportedFormat,
  kCorruptHeader,
  kEmptyAudio,
  kIoFailure,
  kTooShort,
  kInvalidArgument,
  kEmptySegment,
  kSampleRateMismatch,
  kLengthMismatch,
  kEmptyTrainingSet,
  kDimensionMismatch,
  kSingleClassTrainingSet,
  kEmptyDataset,
  kInsufficientAdversarialPool,
  kEmptySet,
  kShapeMismatch,
  kUnknownLabel,
  kTooFewSpeakers,
  kConfigError,
};

std::string_view error_code_name(ErrorCode code);

// Errors carry a machine-readable code so callers (and the CLI exit status)
// can branch on the failure kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace serforge

#endif  // SERFORGE_ERROR_HPP_
