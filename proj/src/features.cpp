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

#include "serforge/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include "serforge/error.hpp"
#include "serforge/format.hpp"
#include "serforge/noise_estimation.hpp"

namespace serforge {

const std::vector<std::string>& descriptor_names() {
  static const std::vector<std::string> names = {
      "log_energy", "zcr",   "spectral_centroid", "spectral_flux", "spectral_rolloff85",
      "spectral_slope", "f0", "voicing_prob", "hnr_db", "mfcc1", "mfcc2", "mfcc3",
      "mfcc4", "mfcc5", "mfcc6", "mfcc7", "mfcc8", "mfcc9"};
  return names;
}

namespace {

constexpr int kMelBands = 26;
constexpr int kNumCepstra = 9;
constexpr double kEnergyFloor = 1e-10;
constexpr double kRolloff = 0.85;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Dense kMelBands x num_bins triangular filterbank over 0..sr/2.
Eigen::MatrixXd mel_filterbank(int num_bins, int frame_length, int sample_rate) {
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(kMelBands, num_bins);
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(kMelBands + 2);
  for (int m = 0; m < kMelBands + 2; ++m) edges[m] = mel_to_hz(mel_max * m / (kMelBands + 1));
  for (int m = 0; m < kMelBands; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < num_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / frame_length;
      if (f > lo && f < hi) fb(m, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

struct PitchEstimate {
  double f0 = 0.0;
  double peak = 0.0;
};

// Normalised autocorrelation r(tau) = sum x[n]x[n+tau] / sqrt(E_head E_tail)
// over the overlapping part, searched in the 60-400 Hz lag range. The lag is
// the shortest local peak reaching 90% of the best peak, refined by parabolic
// interpolation.
PitchEstimate estimate_pitch(std::span<const double> frame, int sample_rate) {
  const int n = static_cast<int>(frame.size());
  const int min_lag = std::max(1, static_cast<int>(std::floor(sample_rate / kMaxF0Hz)));
  const int max_lag = std::min(n - 2, static_cast<int>(std::ceil(sample_rate / kMinF0Hz)));
  PitchEstimate est;
  if (max_lag <= min_lag) return est;

  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + frame[i] * frame[i];
  const double total = prefix[n];
  if (total <= 0.0) return est;

  const std::size_t padded = std::bit_ceil(static_cast<std::size_t>(2 * n));
  std::vector<std::complex<double>> buf(padded);
  for (int i = 0; i < n; ++i) buf[i] = frame[i];
  fft_in_place(buf, false);
  for (auto& z : buf) z = std::norm(z);
  fft_in_place(buf, true);

  std::vector<double> r(max_lag + 2, 0.0);
  for (int lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
    if (lag < 1 || lag >= n) continue;
    const double head = prefix[n - lag];
    const double tail = total - prefix[lag];
    const double denom = std::sqrt(head) * std::sqrt(tail);
    if (!(denom > total * 1e-12)) continue;
    r[lag] = std::clamp(buf[lag].real() / denom, -1.0, 1.0);
  }

  double best = -1.0;
  for (int lag = min_lag; lag <= max_lag; ++lag) best = std::max(best, r[lag]);
  int chosen = -1;
  for (int lag = min_lag; lag <= max_lag; ++lag) {
    const bool local_peak = r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1];
    if (local_peak && r[lag] >= 0.9 * best) {
      chosen = lag;
      break;
    }
  }
  if (chosen < 0) {
    chosen = static_cast<int>(std::max_element(r.begin() + min_lag, r.begin() + max_lag + 1) - r.begin());
  }
  est.peak = std::max(0.0, r[chosen]);
  if (est.peak < kVoicingThreshold) return est;

  double lag = chosen;
  const double a = r[chosen - 1], b = r[chosen], c = r[chosen + 1];
  const double curvature = a - 2.0 * b + c;
  if (curvature < 0.0) lag += std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
  est.f0 = sample_rate / lag;
  return est;
}

}  // namespace

FeatureSequence extract_lld(const Waveform& x, const FrameConfig& config) {
  validate(config);
  validate(x);
  if (x.size() < static_cast<std::size_t>(config.frame_length)) {
    throw Error(ErrorCode::kTooShort, "waveform shorter than one frame");
  }
  const int len = config.frame_length;
  const int bins = config.num_bins();
  const int frames = num_frames_for(x.size(), config);
  const double sr = x.sample_rate;
  const std::vector<double> window = make_window(config);
  const Eigen::MatrixXd fb = mel_filterbank(bins, len, x.sample_rate);

  std::vector<double> freq(bins);
  for (int k = 0; k < bins; ++k) freq[k] = k * sr / len;
  double freq_mean_khz = 0.0;
  for (double f : freq) freq_mean_khz += f / 1000.0;
  freq_mean_khz /= bins;
  double freq_var = 0.0;
  for (double f : freq) freq_var += (f / 1000.0 - freq_mean_khz) * (f / 1000.0 - freq_mean_khz);

  FeatureSequence seq;
  seq.frames.resize(frames, kNumDescriptors);
  seq.descriptor_names = descriptor_names();
  seq.frame_config = config;

  std::vector<double> raw(len), windowed(len);
  Eigen::VectorXd magnitude(bins), power(bins), prev_norm = Eigen::VectorXd::Zero(bins);
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * config.hop_length;
    for (int i = 0; i < len; ++i) {
      const std::size_t idx = start + i;
      raw[i] = idx < x.size() ? x.samples[idx] : 0.0;
      windowed[i] = raw[i] * window[i];
    }
    auto row = seq.frames.row(t);

    double energy = 0.0;
    int crossings = 0;
    for (int i = 0; i < len; ++i) {
      energy += raw[i] * raw[i];
      if (i > 0 && std::signbit(raw[i]) != std::signbit(raw[i - 1]) && raw[i] != raw[i - 1]) {
        ++crossings;
      }
    }
    row(0) = std::log(std::max(std::sqrt(energy / len), kEnergyFloor));
    row(1) = static_cast<double>(crossings) / (len - 1);

    const auto spectrum = rfft(windowed);
    for (int k = 0; k < bins; ++k) {
      power(k) = std::norm(spectrum[k]);
      magnitude(k) = std::sqrt(power(k));
    }
    const double mag_sum = magnitude.sum();
    const double power_sum = power.sum();

    double centroid = 0.0;
    Eigen::VectorXd norm_mag = Eigen::VectorXd::Zero(bins);
    if (mag_sum > 0.0) {
      for (int k = 0; k < bins; ++k) centroid += freq[k] * magnitude(k);
      centroid /= mag_sum;
      norm_mag = magnitude / mag_sum;
    }
    row(2) = centroid;
    row(3) = t == 0 ? 0.0 : (norm_mag - prev_norm).squaredNorm();
    prev_norm = norm_mag;

    double rolloff = 0.0;
    if (power_sum > 0.0) {
      double cum = 0.0;
      for (int k = 0; k < bins; ++k) {
        cum += power(k);
        if (cum >= kRolloff * power_sum) {
          rolloff = freq[k];
          break;
        }
      }
    }
    row(4) = rolloff;

    double db_mean = 0.0;
    std::vector<double> db(bins);
    for (int k = 0; k < bins; ++k) {
      db[k] = 10.0 * std::log10(power(k) + 1e-20);
      db_mean += db[k];
    }
    db_mean /= bins;
    double cov = 0.0;
    for (int k = 0; k < bins; ++k) cov += (freq[k] / 1000.0 - freq_mean_khz) * (db[k] - db_mean);
    row(5) = cov / freq_var;

    const PitchEstimate pitch = estimate_pitch(raw, x.sample_rate);
    row(6) = pitch.f0;
    row(7) = pitch.peak;
    const double r = std::clamp(pitch.peak, 1e-6, 1.0 - 1e-6);
    row(8) = 10.0 * std::log10(r / (1.0 - r));

    Eigen::VectorXd log_mel = (fb * power).array().max(kEnergyFloor).log().matrix();
    for (int c = 1; c <= kNumCepstra; ++c) {
      double acc = 0.0;
      for (int m = 0; m < kMelBands; ++m) {
        acc += log_mel(m) * std::cos(std::numbers::pi * c * (m + 0.5) / kMelBands);
      }
      row(8 + c) = acc * std::sqrt(2.0 / kMelBands);
    }
  }
  return seq;
}

FeatureVector functionals(const FeatureSequence& seq) {
  if (seq.num_frames() < 1) throw Error(ErrorCode::kInvalidArgument, "empty feature sequence");
  FeatureVector out;
  const int n = seq.num_frames();
  for (int d = 0; d < seq.dim(); ++d) {
    std::vector<double> col(n);
    for (int t = 0; t < n; ++t) col[t] = seq.frames(t, d);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    double mean = 0.0;
    for (double v : col) mean += v;
    mean = *lo == *hi ? *lo : mean / n;
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    const std::string& name =
        d < static_cast<int>(seq.descriptor_names.size()) ? seq.descriptor_names[d] : "d" + std::to_string(d);
    out.values.insert(out.values.end(),
                      {mean, std::sqrt(var / n), percentile(col, 20.0), percentile(col, 80.0)});
    out.names.insert(out.names.end(), {name + "_mean", name + "_std", name + "_p20", name + "_p80"});
  }
  return out;
}

StandardizationStats fit_standardization(std::span<const FeatureSequence> train) {
  if (train.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "no training sequences");
  const int dim = train.front().dim();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  double count = 0.0;
  for (const auto& s : train) {
    if (s.dim() != dim) throw Error(ErrorCode::kDimensionMismatch, "descriptor count differs");
    sum += s.frames.colwise().sum().transpose();
    count += s.num_frames();
  }
  if (count == 0.0) throw Error(ErrorCode::kEmptyTrainingSet, "training sequences have no frames");
  StandardizationStats stats;
  stats.mean = sum / count;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
  for (const auto& s : train) {
    sq += (s.frames.rowwise() - stats.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  }
  stats.std = (sq / count).array().sqrt().matrix();
  for (int d = 0; d < dim; ++d) {
    // An exactly constant descriptor keeps its value as the mean so that it
    // maps to 0, free of summation rounding.
    const double first = train.front().frames.rows() ? train.front().frames(0, d) : stats.mean(d);
    bool constant = true;
    for (const auto& s : train) constant = constant && (s.frames.rows() == 0 || (s.frames.col(d).array() == first).all());
    if (constant) stats.mean(d) = first;
    if (!(stats.std(d) >= 1e-8)) stats.std(d) = 1.0;
  }
  return stats;
}

FeatureSequence apply_standardization(const FeatureSequence& seq, const StandardizationStats& stats) {
  if (seq.dim() != stats.mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "standardization dimension differs from sequence");
  }
  FeatureSequence out = seq;
  out.frames = ((seq.frames.rowwise() - stats.mean.transpose()).array().rowwise() /
                stats.std.transpose().array())
                   .matrix();
  return out;
}

void write_feature_csv(const FeatureSequence& seq, std::ostream& out) {
  for (int d = 0; d < seq.dim(); ++d) {
    if (d) out << ',';
    out << (d < static_cast<int>(seq.descriptor_names.size()) ? seq.descriptor_names[d] : "d" + std::to_string(d));
  }
  out << '\n';
  for (int t = 0; t < seq.num_frames(); ++t) {
    for (int d = 0; d < seq.dim(); ++d) {
      if (d) out << ',';
      out << format_double(seq.frames(t, d));
    }
    out << '\n';
  }
}

void write_feature_csv(const FeatureSequence& seq, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  write_feature_csv(seq, f);
  if (!f) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

}  // namespace serforge
