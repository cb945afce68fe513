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

#ifndef SERFORGE_LABELS_HPP_
#define SERFORGE_LABELS_HPP_

#include <string_view>

namespace serforge {

// Binary valence. The integer value is the classifier's class index.
enum class Valence : int { kNegative = 0, kPositive = 1 };

inline constexpr int kNumClasses = 2;

inline int class_index(Valence v) { return static_cast<int>(v); }
inline std::string_view valence_name(Valence v) {
  return v == Valence::kPositive ? "positive" : "negative";
}

}  // namespace serforge

#endif  // SERFORGE_LABELS_HPP_
