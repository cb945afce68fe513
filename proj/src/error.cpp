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

#include "serforge/error.hpp"

namespace serforge {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptySegment: return "EmptySegment";
    case ErrorCode::kSampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingleClassTrainingSet: return "SingleClassTrainingSet";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kInsufficientAdversarialPool: return "InsufficientAdversarialPool";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kTooFewSpeakers: return "TooFewSpeakers";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace serforge
