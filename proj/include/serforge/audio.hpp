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

#ifndef SERFORGE_AUDIO_HPP_
#define SERFORGE_AUDIO_HPP_

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace serforge {

inline constexpr int kCanonicalSampleRate = 16000;

// Mono PCM audio. Samples are nominally in [-1, 1]; load never clips, writes
// (save_wav, synthesis helpers) do.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kCanonicalSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws kInvalidArgument when the waveform is empty, has a non-positive rate,
// or holds non-finite samples.
void validate(const Waveform& w);

// Clamps every sample into [-1, 1] in place.
void clip_in_place(Waveform& w);

enum class WindowKind { kHann, kHamming, kRectangular };

struct FrameConfig {
  int frame_length = 512;
  int hop_length = 256;
  WindowKind window = WindowKind::kHann;

  int num_bins() const { return frame_length / 2 + 1; }
  bool operator==(const FrameConfig&) const = default;
};

void validate(const FrameConfig& config);

// Periodic window of config.frame_length samples.
std::vector<double> make_window(const FrameConfig& config);

// Number of frames produced for `num_samples` samples: frames start every hop
// and the trailing partial frame is zero-padded.
int num_frames_for(std::size_t num_samples, const FrameConfig& config);

struct Spectrogram {
  // Row-major, num_frames x num_bins.
  std::vector<std::complex<double>> bins;
  int num_frames = 0;
  int num_bins = 0;
  FrameConfig frame_config;
  int sample_rate = kCanonicalSampleRate;

  std::complex<double>& at(int frame, int bin) {
    return bins[static_cast<std::size_t>(frame) * num_bins + bin];
  }
  const std::complex<double>& at(int frame, int bin) const {
    return bins[static_cast<std::size_t>(frame) * num_bins + bin];
  }
  std::span<const std::complex<double>> frame(int t) const {
    return {bins.data() + static_cast<std::size_t>(t) * num_bins,
            static_cast<std::size_t>(num_bins)};
  }
};

// In-place iterative radix-2 FFT; data.size() must be a power of two.
void fft_in_place(std::vector<std::complex<double>>& data, bool inverse);

// Real-input DFT of a power-of-two block; returns the n/2 + 1 non-negative
// frequency bins.
std::vector<std::complex<double>> rfft(std::span<const double> block);

// Inverse of rfft for a block of length n (n/2 + 1 bins in).
std::vector<double> irfft(std::span<const std::complex<double>> half, int n);

Waveform load_wav(const std::filesystem::path& path);
void save_wav(const Waveform& waveform, const std::filesystem::path& path);

Spectrogram stft(const Waveform& waveform, const FrameConfig& config);
Waveform istft(const Spectrogram& spec);

}  // namespace serforge

#endif  // SERFORGE_AUDIO_HPP_
