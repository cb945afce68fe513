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

#ifndef SERFORGE_FEATURES_HPP_
#define SERFORGE_FEATURES_HPP_

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "serforge/audio.hpp"

namespace serforge {

// Descriptor layout of the bundled extractor, one column each:
//   0 log_energy          log of frame RMS (floored at 1e-10)
//   1 zcr                 zero-crossing rate
//   2 spectral_centroid   Hz, magnitude weighted
//   3 spectral_flux       squared change of the L1-normalised magnitude spectrum
//   4 spectral_rolloff85  Hz below which 85% of the power lies
//   5 spectral_slope      dB/kHz, least-squares over all bins
//   6 f0                  Hz, 0 when unvoiced
//   7 voicing_prob        normalised autocorrelation peak
//   8 hnr_db              harmonics-to-noise ratio from the same peak
//   9..17 mfcc1..mfcc9    26-band mel filterbank, DCT-II
inline constexpr int kNumDescriptors = 18;

const std::vector<std::string>& descriptor_names();

struct FeatureSequence {
  Eigen::MatrixXd frames;  // num_frames x num_descriptors
  std::vector<std::string> descriptor_names;
  FrameConfig frame_config;

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }
};

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> names;
};

struct StandardizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

inline constexpr double kMinF0Hz = 60.0;
inline constexpr double kMaxF0Hz = 400.0;
inline constexpr double kVoicingThreshold = 0.3;

FeatureSequence extract_lld(const Waveform& x, const FrameConfig& config = {});

// Four functionals per descriptor, grouped by descriptor in the order
// mean, std, p20, p80 (std is the population standard deviation; the
// percentiles interpolate linearly).
FeatureVector functionals(const FeatureSequence& seq);

StandardizationStats fit_standardization(std::span<const FeatureSequence> train);
FeatureSequence apply_standardization(const FeatureSequence& seq, const StandardizationStats& stats);

// Header row of descriptor names, one row per frame.
void write_feature_csv(const FeatureSequence& seq, std::ostream& out);
void write_feature_csv(const FeatureSequence& seq, const std::filesystem::path& path);

}  // namespace serforge

#endif  // SERFORGE_FEATURES_HPP_
