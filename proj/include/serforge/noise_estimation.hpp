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

#ifndef SERFORGE_NOISE_ESTIMATION_HPP_
#define SERFORGE_NOISE_ESTIMATION_HPP_

#include <vector>

#include "serforge/audio.hpp"

namespace serforge {

// Background-noise statistics of one utterance. time_mean and time_variance
// describe the noise-classified samples (population variance); spectral_floor
// holds one power value per STFT bin.
struct NoiseProfile {
  double time_mean = 0.0;
  double time_variance = 0.0;
  std::vector<double> spectral_floor;
  FrameConfig frame_config;
};

struct NoiseEstimatorConfig {
  double percentile = 10.0;
  // A frame is noise-only when its broadband power is within this many dB of
  // the bias-compensated floor power.
  double gate_db = 3.0;
  int smoothing_bins = 3;
};

// Minimum-statistics estimate: per-bin low percentile of frame power over
// time, smoothed across neighbouring bins. Frames close to the floor are
// gated as noise-only and their samples provide the time-domain statistics.
//
// The percentile of an exponentially distributed bin power underestimates
// its mean by -ln(1 - p/100); the gate compensates for that bias while the
// stored spectral floor stays the raw percentile.
NoiseProfile estimate_noise_profile(const Waveform& x, const FrameConfig& config = {},
                                    const NoiseEstimatorConfig& estimator = {});

// Linear-interpolation percentile (p in [0, 100]) of an unsorted sample.
double percentile(std::vector<double> values, double p);

}  // namespace serforge

#endif  // SERFORGE_NOISE_ESTIMATION_HPP_
