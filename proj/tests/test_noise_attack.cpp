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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "serforge/attack.hpp"
#include "serforge/error.hpp"
#include "serforge/noise_estimation.hpp"
#include "test_util.hpp"

using namespace serforge;
namespace st = serforge::testing;

namespace {

Waveform add(const Waveform& a, const Waveform& b) {
  Waveform out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += b.samples[i];
  return out;
}

Waveform scaled(const Waveform& a, double c) {
  Waveform out = a;
  for (auto& s : out.samples) s *= c;
  return out;
}

// Speech-like test signal: a tone burst in the middle third over white noise.
Waveform burst_over_noise(std::size_t n, double noise_std, std::uint64_t seed) {
  Waveform x = st::white_noise(n, noise_std, seed);
  const Waveform tone = st::sinusoid(n, 300.0, 0.3);
  for (std::size_t i = n / 3; i < 2 * n / 3; ++i) x.samples[i] += tone.samples[i];
  return x;
}

NoiseSource make_source(std::size_t n, std::uint64_t seed) {
  return NoiseSource{st::white_noise(n, 0.1, seed), NoiseKind::kCafe};
}

}  // namespace

TEST_CASE("percentile interpolates linearly") {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[i] = 99 - i;
  CHECK(percentile(v, 20.0) == doctest::Approx(19.8).epsilon(1e-12));
  CHECK(percentile(v, 80.0) == doctest::Approx(79.2).epsilon(1e-12));
  CHECK(percentile({4.0}, 37.0) == 4.0);
}

TEST_CASE("noise profile of stationary white noise") {
  const Waveform x = st::white_noise(3 * 16000, 0.1, 21);
  const auto p = estimate_noise_profile(x);
  CHECK(p.time_variance == doctest::Approx(0.01).epsilon(0.2));
  CHECK(std::abs(p.time_mean) <= 0.005);
  CHECK(p.spectral_floor.size() == static_cast<std::size_t>(FrameConfig{}.num_bins()));
}

TEST_CASE("noise profile of silence is zero") {
  Waveform x;
  x.samples.assign(8000, 0.0);
  const auto p = estimate_noise_profile(x);
  CHECK(p.time_mean == 0.0);
  CHECK(p.time_variance == 0.0);
  for (double v : p.spectral_floor) CHECK(v == 0.0);
}

TEST_CASE("gating excludes a loud sinusoid") {
  // Tone at 20 dB over the noise, present in the middle third only.
  const double sigma2 = 1e-4;
  const double amp = std::sqrt(2.0 * 100.0 * sigma2);
  Waveform x = st::white_noise(3 * 16000, std::sqrt(sigma2), 4);
  const Waveform tone = st::sinusoid(x.size(), 440.0, amp);
  for (std::size_t i = x.size() / 3; i < 2 * x.size() / 3; ++i) x.samples[i] += tone.samples[i];
  const auto p = estimate_noise_profile(x);
  CHECK(p.time_variance == doctest::Approx(sigma2).epsilon(0.5));
}

TEST_CASE("noise profile requires two frames") {
  Waveform x;
  x.samples.assign(1000, 0.01);
  CHECK_THROWS_AS(estimate_noise_profile(x), Error);
}

TEST_CASE("noise profile scales with c squared") {
  const Waveform x = burst_over_noise(24000, 0.01, 8);
  const auto p = estimate_noise_profile(x);
  for (double c : {0.25, 1.7, 3.0}) {
    const auto q = estimate_noise_profile(scaled(x, c));
    CHECK(q.time_variance == doctest::Approx(c * c * p.time_variance).epsilon(1e-9));
    for (std::size_t k = 0; k < p.spectral_floor.size(); ++k) {
      CHECK(q.spectral_floor[k] == doctest::Approx(c * c * p.spectral_floor[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("adding stationary noise never lowers the variance estimate") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const Waveform x = burst_over_noise(16000, rng.uniform(0.001, 0.02), 1000 + trial);
    const double v = rng.uniform(1e-6, 1e-3);
    const Waveform noise = st::white_noise(x.size(), std::sqrt(v), 5000 + trial);
    const double before = estimate_noise_profile(x).time_variance;
    const double after = estimate_noise_profile(add(x, noise)).time_variance;
    CHECK(after >= before);
  }
}

TEST_CASE("noise profile is deterministic") {
  const Waveform x = burst_over_noise(16000, 0.01, 2);
  const auto a = estimate_noise_profile(x);
  const auto b = estimate_noise_profile(x);
  CHECK(a.time_mean == b.time_mean);
  CHECK(a.time_variance == b.time_variance);
  CHECK(a.spectral_floor == b.spectral_floor);
}

TEST_CASE("match_noise_statistics") {
  NoiseProfile target;
  target.time_mean = 0.001;
  target.time_variance = 1e-4;

  SUBCASE("identity when already matched") {
    Waveform seg = st::white_noise(1000, 1.0, 3);
    NoiseProfile own;
    own.time_mean = st::sample_mean(seg.samples);
    own.time_variance = st::population_variance(seg.samples);
    const Waveform out = match_noise_statistics(seg, own);
    for (std::size_t i = 0; i < seg.size(); ++i) CHECK(std::abs(out.samples[i] - seg.samples[i]) <= 1e-12);
  }
  SUBCASE("arbitrary segment reaches the target") {
    const Waveform out = match_noise_statistics(st::random_waveform(777, 4, 0.9), target);
    CHECK(std::abs(st::sample_mean(out.samples) - 0.001) <= 1e-9);
    CHECK(std::abs(st::population_variance(out.samples) - 1e-4) <= 1e-9);
  }
  SUBCASE("constant segment gives the constant mean") {
    Waveform seg;
    seg.samples.assign(50, 0.3);
    NoiseProfile zero_mean = target;
    zero_mean.time_mean = 0.0;
    for (double v : match_noise_statistics(seg, zero_mean).samples) CHECK(v == 0.0);
  }
  SUBCASE("empty segment") {
    CHECK_THROWS_AS(match_noise_statistics(Waveform{}, target), Error);
  }
}

TEST_CASE("statistics matching over 1000 random pairs") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 16 + rng.below(4000);
    Waveform seg = st::random_waveform(n, 10000 + trial, rng.uniform(0.01, 1.0));
    const double offset = rng.uniform(-0.2, 0.2);
    for (auto& s : seg.samples) s += offset;
    NoiseProfile p;
    p.time_mean = rng.uniform(-0.01, 0.01);
    p.time_variance = std::pow(10.0, rng.uniform(-8.0, -1.0));
    const Waveform out = match_noise_statistics(seg, p);
    CHECK(std::abs(st::sample_mean(out.samples) - p.time_mean) <= 1e-9);
    CHECK(std::abs(st::population_variance(out.samples) - p.time_variance) <= 1e-9 * p.time_variance);
  }
}

TEST_CASE("craft_adversarial") {
  const Waveform x = burst_over_noise(16000, 0.01, 12);
  const NoiseSource source = make_source(48000, 13);
  AttackConfig cfg;
  cfg.seed = 77;

  SUBCASE("epsilon zero is the identity") {
    cfg.epsilon = 0.0;
    CHECK(craft_adversarial(x, source, cfg).samples == x.samples);
  }
  SUBCASE("epsilon one adds delta exactly") {
    cfg.epsilon = 1.0;
    const Waveform adv = craft_adversarial(x, source, cfg);
    const Waveform delta = craft_perturbation(x, source, cfg);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(adv.samples[i] - x.samples[i] - delta.samples[i]) <= 1e-12);
  }
  SUBCASE("delta matches the utterance profile") {
    const Waveform delta = craft_perturbation(x, source, cfg);
    const auto p = estimate_noise_profile(x, cfg.analysis);
    CHECK(std::abs(st::sample_mean(delta.samples) - p.time_mean) <= 1e-9);
    CHECK(std::abs(st::population_variance(delta.samples) - p.time_variance) <= 1e-9 * p.time_variance);
  }
  SUBCASE("silent input is never perturbed") {
    Waveform silent;
    silent.samples.assign(8000, 0.0);
    for (double eps : {0.5, 1.0, 2.0, 10.0}) {
      cfg.epsilon = eps;
      CHECK(craft_adversarial(silent, source, cfg).samples == silent.samples);
    }
  }
  SUBCASE("linear in epsilon before clipping") {
    cfg.epsilon = 0.7;
    const Waveform a = craft_adversarial(x, source, cfg);
    cfg.epsilon = 1.4;
    const Waveform b = craft_adversarial(x, source, cfg);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs((b.samples[i] - x.samples[i]) - 2.0 * (a.samples[i] - x.samples[i])) <= 1e-9);
    }
  }
  SUBCASE("output is clipped") {
    Waveform loud = x;
    for (auto& s : loud.samples) s = std::clamp(s * 3.0, -1.0, 1.0);
    cfg.epsilon = 50.0;
    for (double s : craft_adversarial(loud, source, cfg).samples) CHECK(std::abs(s) <= 1.0);
  }
  SUBCASE("rate mismatch") {
    NoiseSource other = source;
    other.audio.sample_rate = 8000;
    CHECK_THROWS_AS(craft_adversarial(x, other, cfg), Error);
  }
  SUBCASE("deterministic per seed") {
    cfg.epsilon = 1.0;
    CHECK(craft_adversarial(x, source, cfg).samples == craft_adversarial(x, source, cfg).samples);
  }
}

TEST_CASE("segment selection wraps cyclically") {
  NoiseSource src;
  src.audio.samples = {0.0, 1.0, 2.0, 3.0, 4.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t off = segment_offset(5, seed);
    CHECK(off < 5);
    const Waveform seg = select_segment(src, 12, seed);
    REQUIRE(seg.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) CHECK(seg.samples[i] == static_cast<double>((off + i) % 5));
  }
}

TEST_CASE("different seeds pick different offsets") {
  // Over a long source, 10 000 seeds should essentially never collide.
  std::set<std::size_t> offsets;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) offsets.insert(segment_offset(std::size_t{1} << 40, seed));
  CHECK(offsets.size() == 10000);
}

TEST_CASE("perceptibility_snr") {
  Waveform x;
  x.samples.assign(100, 0.5);
  CHECK(perceptibility_snr(x, x) == kInfiniteSnr);

  Waveform y = x;
  // Perturbation energy 1% of the signal energy.
  for (auto& s : y.samples) s += 0.05;
  CHECK(perceptibility_snr(x, y) == doctest::Approx(20.0).epsilon(1e-8));

  const Waveform sig = burst_over_noise(16000, 0.01, 31);
  const NoiseSource source = make_source(48000, 32);
  AttackConfig cfg;
  cfg.seed = 5;
  cfg.epsilon = 0.5;
  const double a = perceptibility_snr(sig, craft_adversarial(sig, source, cfg));
  cfg.epsilon = 1.0;
  const double b = perceptibility_snr(sig, craft_adversarial(sig, source, cfg));
  CHECK(a - b == doctest::Approx(20.0 * std::log10(2.0)).epsilon(0.1 / 6.02));

  Waveform shorter;
  shorter.samples.assign(99, 0.5);
  CHECK_THROWS_AS(perceptibility_snr(x, shorter), Error);
}

TEST_CASE("noise kind names") {
  for (auto k : {NoiseKind::kCafe, NoiseKind::kMeeting, NoiseKind::kStation, NoiseKind::kUserSupplied}) {
    CHECK(parse_noise_kind(noise_kind_name(k)) == k);
  }
  CHECK_FALSE(parse_noise_kind("airport").has_value());
}
