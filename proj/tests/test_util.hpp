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

#ifndef SERFORGE_TESTS_TEST_UTIL_HPP_
#define SERFORGE_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "serforge/audio.hpp"
#include "serforge/features.hpp"
#include "serforge/nn.hpp"
#include "serforge/random.hpp"

namespace serforge::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("serforge_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline Waveform random_waveform(std::size_t n, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = rng.uniform(-scale, scale);
  return w;
}

inline Waveform white_noise(std::size_t n, double stddev, std::uint64_t seed) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = stddev * rng.normal();
  return w;
}

inline Waveform sinusoid(std::size_t n, double freq, double amplitude, int sample_rate = kCanonicalSampleRate,
                         double phase = 0.0) {
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  const double pi = std::acos(-1.0);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amplitude * std::sin(2.0 * pi * freq * static_cast<double>(i) / sample_rate + phase);
  }
  return w;
}

// O(n^2) DFT.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  const double pi = std::acos(-1.0);
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * pi * static_cast<double>(k * t % n) / static_cast<double>(n));
    }
    out[k] = acc;
  }
  return out;
}

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double population_variance(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

inline FeatureSequence random_sequence(int frames, int dim, Rng& rng, double scale = 1.0) {
  FeatureSequence s;
  s.frames.resize(frames, dim);
  for (int t = 0; t < frames; ++t) {
    for (int d = 0; d < dim; ++d) s.frames(t, d) = scale * rng.uniform(-1.0, 1.0);
  }
  for (int d = 0; d < dim; ++d) s.descriptor_names.push_back("d" + std::to_string(d));
  return s;
}

struct GradientCheck {
  double worst_relative = 0.0;
  std::string worst_name;
  int checked = 0;
  int failures = 0;
};

// Central finite differences over every scalar of every tensor. An entry
// passes when |a - n| <= max(abs_tol, rel_tol * max(|a|, |n|)).
template <typename Params>
GradientCheck check_gradients(Params params, const Params& analytic,
                              const std::function<double(const Params&)>& loss, double h = 1e-5,
                              double rel_tol = 1e-4, double abs_tol = 1e-7) {
  GradientCheck result;
  std::vector<std::pair<std::string, nn::Matrix*>> tensors;
  std::vector<const nn::Matrix*> grads;
  params.for_each("", [&](const std::string& name, nn::Matrix& m) { tensors.emplace_back(name, &m); });
  analytic.for_each("", [&](const std::string&, const nn::Matrix& m) { grads.push_back(&m); });
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    nn::Matrix& m = *tensors[k].second;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m.data()[i];
      m.data()[i] = orig + h;
      const double up = loss(params);
      m.data()[i] = orig - h;
      const double down = loss(params);
      m.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[k]->data()[i];
      const double err = std::abs(a - numeric);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      ++result.checked;
      if (err > std::max(abs_tol, rel_tol * scale)) ++result.failures;
      if (scale > abs_tol && err / scale > result.worst_relative) {
        result.worst_relative = err / scale;
        result.worst_name = tensors[k].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

// Mean F0 of an utterance from plain autocorrelation over 40 ms frames.
// Frames below a tenth of the loudest frame's energy are skipped.
inline double oracle_mean_f0(const Waveform& w) {
  const int frame = w.sample_rate / 25;
  const int min_lag = w.sample_rate / 400, max_lag = w.sample_rate / 60;
  std::vector<double> energies, f0s;
  for (std::size_t start = 0; start + frame + max_lag + 1 <= w.size(); start += frame / 2) {
    double e = 0.0;
    for (int i = 0; i < frame; ++i) e += w.samples[start + i] * w.samples[start + i];
    std::vector<double> r(max_lag + 2, 0.0);
    double rmax = -1e300;
    for (int lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
      for (int i = 0; i < frame; ++i) r[lag] += w.samples[start + i] * w.samples[start + i + lag];
      if (lag >= min_lag && lag <= max_lag) rmax = std::max(rmax, r[lag]);
    }
    // Shortest lag that is a local peak close to the maximum, to avoid
    // picking a multiple of the period.
    int best = min_lag;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] >= 0.9 * rmax && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
        best = lag;
        break;
      }
    }
    energies.push_back(e);
    f0s.push_back(static_cast<double>(w.sample_rate) / best);
  }
  double emax = 0.0;
  for (double e : energies) emax = std::max(emax, e);
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (energies[i] >= 0.1 * emax) {
      sum += f0s[i];
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

}  // namespace serforge::testing

#endif  // SERFORGE_TESTS_TEST_UTIL_HPP_
