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

#ifndef SERFORGE_ATTACK_HPP_
#define SERFORGE_ATTACK_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "serforge/audio.hpp"
#include "serforge/noise_estimation.hpp"

namespace serforge {

enum class NoiseKind { kCafe, kMeeting, kStation, kUserSupplied };

std::string_view noise_kind_name(NoiseKind kind);
// Accepts "cafe", "meeting", "station", "user_supplied"; nullopt otherwise.
std::optional<NoiseKind> parse_noise_kind(std::string_view name);

// A long recording of real-world (or synthetic stand-in) background noise.
struct NoiseSource {
  Waveform audio;
  NoiseKind kind = NoiseKind::kUserSupplied;
};

struct AttackConfig {
  double epsilon = 1.0;
  NoiseKind noise_kind = NoiseKind::kCafe;
  std::uint64_t seed = 0;
  // Framing used for the background-noise estimate of the target utterance.
  FrameConfig analysis{};
};

// Rescales `noise_segment` so its sample mean and (population) variance equal
// the profile's time statistics. A constant segment, or a zero-variance
// profile, yields the constant profile mean.
Waveform match_noise_statistics(const Waveform& noise_segment, const NoiseProfile& profile);

// Offset into `source_length` samples chosen from the seed.
std::size_t segment_offset(std::size_t source_length, std::uint64_t seed);

// |length| samples of the source starting at segment_offset(seed), wrapping
// cyclically.
Waveform select_segment(const NoiseSource& source, std::size_t length, std::uint64_t seed);

// The unscaled perturbation delta: a statistics-matched noise segment for x.
Waveform craft_perturbation(const Waveform& x, const NoiseSource& source, const AttackConfig& config);

// x + epsilon * delta, clipped to [-1, 1].
Waveform craft_adversarial(const Waveform& x, const NoiseSource& source, const AttackConfig& config);

inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

// 10 log10(signal energy / perturbation energy) in dB; kInfiniteSnr when the
// perturbation is exactly zero.
double perceptibility_snr(const Waveform& x, const Waveform& x_adv);

}  // namespace serforge

#endif  // SERFORGE_ATTACK_HPP_
