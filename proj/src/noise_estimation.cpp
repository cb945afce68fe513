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

#include "serforge/noise_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "serforge/error.hpp"

namespace serforge {

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

NoiseProfile estimate_noise_profile(const Waveform& x, const FrameConfig& config,
                                    const NoiseEstimatorConfig& estimator) {
  validate(config);
  if (x.size() < 2 * static_cast<std::size_t>(config.frame_length)) {
    throw Error(ErrorCode::kTooShort, "noise estimation needs at least two frames of audio");
  }
  if (estimator.percentile <= 0.0 || estimator.percentile >= 100.0 || estimator.smoothing_bins < 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid noise estimator configuration");
  }
  const Spectrogram spec = stft(x, config);
  const int frames = spec.num_frames;
  const int bins = spec.num_bins;

  std::vector<double> frame_power(frames, 0.0);
  std::vector<double> raw_floor(bins, 0.0);
  std::vector<double> column(frames);
  for (int k = 0; k < bins; ++k) {
    for (int t = 0; t < frames; ++t) {
      column[t] = std::norm(spec.at(t, k));
      frame_power[t] += column[t];
    }
    raw_floor[k] = percentile(column, estimator.percentile);
  }

  NoiseProfile profile;
  profile.frame_config = config;
  profile.spectral_floor.resize(bins);
  const int half = estimator.smoothing_bins / 2;
  for (int k = 0; k < bins; ++k) {
    const int lo = std::max(0, k - half);
    const int hi = std::min(bins - 1, k + half);
    double acc = 0.0;
    for (int j = lo; j <= hi; ++j) acc += raw_floor[j];
    profile.spectral_floor[k] = acc / (hi - lo + 1);
  }

  const double floor_power =
      std::accumulate(profile.spectral_floor.begin(), profile.spectral_floor.end(), 0.0);
  const double bias = -std::log1p(-estimator.percentile / 100.0);
  const double threshold = floor_power / bias * std::pow(10.0, estimator.gate_db / 10.0);

  std::vector<char> noise_sample(x.size(), 0);
  auto mark = [&](int t) {
    const std::size_t start = static_cast<std::size_t>(t) * config.hop_length;
    const std::size_t end = std::min(x.size(), start + config.frame_length);
    std::fill(noise_sample.begin() + static_cast<std::ptrdiff_t>(start),
              noise_sample.begin() + static_cast<std::ptrdiff_t>(end), 1);
  };
  bool any = false;
  for (int t = 0; t < frames; ++t) {
    if (frame_power[t] <= threshold) {
      mark(t);
      any = true;
    }
  }
  if (!any) {
    mark(static_cast<int>(std::min_element(frame_power.begin(), frame_power.end()) -
                          frame_power.begin()));
  }

  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (noise_sample[i]) {
      sum += x.samples[i];
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (noise_sample[i]) {
      const double d = x.samples[i] - mean;
      sq += d * d;
    }
  }
  profile.time_mean = mean;
  profile.time_variance = sq / static_cast<double>(count);
  return profile;
}

}  // namespace serforge
