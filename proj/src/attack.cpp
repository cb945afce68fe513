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

#include "serforge/attack.hpp"

#include <algorithm>
#include <cmath>

#include "serforge/error.hpp"
#include "serforge/random.hpp"

namespace serforge {

std::string_view noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kCafe: return "cafe";
    case NoiseKind::kMeeting: return "meeting";
    case NoiseKind::kStation: return "station";
    case NoiseKind::kUserSupplied: return "user_supplied";
  }
  return "user_supplied";
}

std::optional<NoiseKind> parse_noise_kind(std::string_view name) {
  for (NoiseKind k : {NoiseKind::kCafe, NoiseKind::kMeeting, NoiseKind::kStation,
                      NoiseKind::kUserSupplied}) {
    if (noise_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

Waveform match_noise_statistics(const Waveform& noise_segment, const NoiseProfile& profile) {
  if (noise_segment.samples.empty()) {
    throw Error(ErrorCode::kEmptySegment, "noise segment has no samples");
  }
  if (!(profile.time_variance >= 0.0) || !std::isfinite(profile.time_mean)) {
    throw Error(ErrorCode::kInvalidArgument, "noise profile statistics are invalid");
  }
  const auto n = static_cast<double>(noise_segment.size());
  double sum = 0.0;
  for (double s : noise_segment.samples) sum += s;
  const double mean = sum / n;
  double sq = 0.0;
  for (double s : noise_segment.samples) sq += (s - mean) * (s - mean);
  const auto [lo, hi] = std::minmax_element(noise_segment.samples.begin(), noise_segment.samples.end());
  // Exact test: a constant segment's summed mean can carry rounding noise.
  const double sigma = *lo == *hi ? 0.0 : std::sqrt(sq / n);
  const double target_sigma = std::sqrt(profile.time_variance);

  Waveform out;
  out.sample_rate = noise_segment.sample_rate;
  out.samples.assign(noise_segment.size(), profile.time_mean);
  if (sigma == 0.0 || target_sigma == 0.0) return out;
  const double gain = target_sigma / sigma;
  for (std::size_t i = 0; i < noise_segment.size(); ++i) {
    out.samples[i] = (noise_segment.samples[i] - mean) * gain + profile.time_mean;
  }
  return out;
}

std::size_t segment_offset(std::size_t source_length, std::uint64_t seed) {
  if (source_length == 0) throw Error(ErrorCode::kEmptySegment, "noise source is empty");
  return static_cast<std::size_t>(splitmix64(seed) % source_length);
}

Waveform select_segment(const NoiseSource& source, std::size_t length, std::uint64_t seed) {
  const std::size_t n = source.audio.size();
  const std::size_t offset = segment_offset(n, seed);
  Waveform seg;
  seg.sample_rate = source.audio.sample_rate;
  seg.samples.resize(length);
  for (std::size_t i = 0; i < length; ++i) seg.samples[i] = source.audio.samples[(offset + i) % n];
  return seg;
}

Waveform craft_perturbation(const Waveform& x, const NoiseSource& source, const AttackConfig& config) {
  validate(x);
  validate(source.audio);
  if (x.sample_rate != source.audio.sample_rate) {
    throw Error(ErrorCode::kSampleRateMismatch,
                "utterance at " + std::to_string(x.sample_rate) + " Hz, noise at " +
                    std::to_string(source.audio.sample_rate) + " Hz");
  }
  const NoiseProfile profile = estimate_noise_profile(x, config.analysis);
  return match_noise_statistics(select_segment(source, x.size(), config.seed), profile);
}

Waveform craft_adversarial(const Waveform& x, const NoiseSource& source, const AttackConfig& config) {
  if (!(config.epsilon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
  const Waveform delta = craft_perturbation(x, source, config);
  Waveform out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += config.epsilon * delta.samples[i];
  clip_in_place(out);
  return out;
}

double perceptibility_snr(const Waveform& x, const Waveform& x_adv) {
  if (x.size() != x_adv.size()) {
    throw Error(ErrorCode::kLengthMismatch, "clean and adversarial lengths differ");
  }
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x_adv.samples[i] - x.samples[i];
    signal += x.samples[i] * x.samples[i];
    noise += d * d;
  }
  if (noise == 0.0) return kInfiniteSnr;
  return 10.0 * std::log10(signal / noise);
}

}  // namespace serforge
