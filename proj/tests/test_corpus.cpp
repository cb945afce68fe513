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
#include <fstream>
#include <set>

#include "serforge/audio.hpp"
#include "serforge/classifier.hpp"
#include "serforge/corpus.hpp"
#include "serforge/error.hpp"
#include "test_util.hpp"

using namespace serforge;
namespace st = serforge::testing;

namespace {

// Fraction of power below `hz`, and the power-weighted mean frequency, from
// an averaged periodogram.
struct Psd {
  double below_500 = 0.0;
  double centroid = 0.0;
};

Psd psd_summary(const Waveform& w) {
  const int n = 4096;
  std::vector<double> power(n / 2 + 1, 0.0);
  for (std::size_t start = 0; start + n <= w.size(); start += n) {
    std::vector<double> block(w.samples.begin() + static_cast<std::ptrdiff_t>(start),
                              w.samples.begin() + static_cast<std::ptrdiff_t>(start + n));
    const auto spec = rfft(block);
    for (int k = 0; k <= n / 2; ++k) power[k] += std::norm(spec[k]);
  }
  double total = 0.0, low = 0.0, weighted = 0.0;
  for (int k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * w.sample_rate / n;
    total += power[k];
    weighted += f * power[k];
    if (f < 500.0) low += power[k];
  }
  return {low / total, weighted / total};
}

double threshold_oracle_accuracy(const std::vector<LabeledUtterance>& train,
                                 const std::vector<LabeledUtterance>& test) {
  std::vector<std::pair<double, bool>> scored;
  for (const auto& u : train) scored.emplace_back(st::oracle_mean_f0(u.waveform), u.label == Valence::kPositive);
  std::sort(scored.begin(), scored.end());
  double best_threshold = 0.0;
  std::size_t best_correct = 0;
  for (std::size_t i = 0; i + 1 < scored.size(); ++i) {
    const double thr = 0.5 * (scored[i].first + scored[i + 1].first);
    std::size_t correct = 0;
    for (const auto& [f0, pos] : scored) correct += (f0 > thr) == pos ? 1 : 0;
    if (correct > best_correct) {
      best_correct = correct;
      best_threshold = thr;
    }
  }
  int correct = 0;
  for (const auto& u : test) {
    correct += (st::oracle_mean_f0(u.waveform) > best_threshold) == (u.label == Valence::kPositive) ? 1 : 0;
  }
  return 100.0 * correct / static_cast<double>(test.size());
}

std::vector<LabeledSequence> featurize(const std::vector<LabeledUtterance>& us) {
  std::vector<LabeledSequence> out;
  for (const auto& u : us) out.push_back({extract_lld(u.waveform, FrameConfig{1024, 512, WindowKind::kHann}), u.label});
  return out;
}

}  // namespace

TEST_CASE("valence mapping") {
  CHECK(map_label("sadness", LabelScheme::kIemocap) == Valence::kNegative);
  CHECK(map_label("anger", LabelScheme::kIemocap) == Valence::kNegative);
  CHECK(map_label("Happiness", LabelScheme::kIemocap) == Valence::kPositive);
  CHECK(map_label("excited", LabelScheme::kIemocap) == Valence::kPositive);
  CHECK(map_label("NEUTRAL", LabelScheme::kIemocap) == Valence::kPositive);
  CHECK(map_label("motherese", LabelScheme::kFauAibo) == Valence::kPositive);
  CHECK(map_label("joyful", LabelScheme::kFauAibo) == Valence::kPositive);
  CHECK(map_label("neutral", LabelScheme::kFauAibo) == Valence::kPositive);
  for (const char* neg : {"angry", "touchy", "reprimanding", "emphatic"}) {
    CHECK(map_label(neg, LabelScheme::kFauAibo) == Valence::kNegative);
  }
  for (const char* unknown : {"surprise", "frustration", "fear"}) {
    try {
      map_label(unknown, LabelScheme::kIemocap);
      FAIL("expected UnknownLabel");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnknownLabel);
    }
  }
  CHECK_THROWS_AS(map_label("sadness", LabelScheme::kFauAibo), Error);
}

TEST_CASE("synthetic corpus is deterministic and balanced") {
  CorpusSpec spec;
  spec.num_speakers = 2;
  spec.utterances_per_speaker = 6;
  spec.duration_s = 0.5;
  spec.seed = 42;
  const auto a = generate_synthetic_corpus(spec);
  const auto b = generate_synthetic_corpus(spec);
  REQUIRE(a.size() == 12);
  int positive = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].waveform.samples == b[i].waveform.samples);
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].waveform.size() == 8000);
    for (double s : a[i].waveform.samples) CHECK(std::abs(s) <= 1.0);
    positive += a[i].label == Valence::kPositive ? 1 : 0;
  }
  CHECK(positive == 6);
  spec.seed = 43;
  CHECK(generate_synthetic_corpus(spec)[0].waveform.samples != a[0].waveform.samples);
}

TEST_CASE("mean F0 threshold separates the default corpus") {
  CorpusSpec spec;
  spec.seed = 1;
  const auto corpus = generate_synthetic_corpus(spec);
  const auto split = split_speaker_independent(corpus, 0.2, 1);
  CHECK(threshold_oracle_accuracy(split.train, split.test) >= 95.0);
}

TEST_CASE("zero separation leaves nothing to learn") {
  CorpusSpec spec;
  spec.num_speakers = 10;
  spec.utterances_per_speaker = 40;
  spec.duration_s = 1.0;
  spec.class_separation = 0.0;
  spec.seed = 5;
  const auto split = split_speaker_independent(generate_synthetic_corpus(spec), 0.5, 5);
  auto train_set = featurize(split.train), eval_set = featurize(split.eval), test_set = featurize(split.test);
  std::vector<FeatureSequence> raw;
  for (const auto& x : train_set) raw.push_back(x.seq);
  const auto stats = fit_standardization(raw);
  for (auto* set : {&train_set, &eval_set, &test_set}) {
    for (auto& x : *set) x.seq = apply_standardization(x.seq, stats);
  }
  TrainConfig cfg;
  cfg.seed = 5;
  cfg.hidden1 = cfg.hidden2 = 8;
  cfg.max_epochs = 15;
  const double ua = evaluate(train(train_set, eval_set, cfg).params, test_set).unweighted_accuracy;
  CHECK(ua >= 40.0);
  CHECK(ua <= 60.0);
}

TEST_CASE("noise sources") {
  const auto cafe = generate_noise_source(NoiseKind::kCafe, 10.0, 3);
  const auto meeting = generate_noise_source(NoiseKind::kMeeting, 10.0, 3);
  const auto station = generate_noise_source(NoiseKind::kStation, 10.0, 3);
  CHECK(station.kind == NoiseKind::kStation);
  CHECK(generate_noise_source(NoiseKind::kCafe, 10.0, 3).audio.samples == cafe.audio.samples);
  CHECK(generate_noise_source(NoiseKind::kCafe, 10.0, 4).audio.samples != cafe.audio.samples);

  const Psd s = psd_summary(station.audio);
  const Psd c = psd_summary(cafe.audio);
  CHECK(s.below_500 >= 0.6);
  CHECK(std::abs(c.centroid - s.centroid) >= 300.0);

  // 1 s window variance varies by less than 3x.
  for (const auto* src : {&cafe, &meeting, &station}) {
    const auto& x = src->audio.samples;
    const std::size_t win = static_cast<std::size_t>(src->audio.sample_rate);
    double lo = 1e300, hi = 0.0;
    for (std::size_t start = 0; start + win <= x.size(); start += win) {
      const std::vector<double> w(x.begin() + static_cast<std::ptrdiff_t>(start),
                                  x.begin() + static_cast<std::ptrdiff_t>(start + win));
      const double v = st::population_variance(w);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(hi < 3.0 * lo);
    for (double v : x) CHECK(std::abs(v) <= 1.0);
  }
}

TEST_CASE("speaker independent split") {
  CorpusSpec spec;
  spec.utterances_per_speaker = 2;
  spec.duration_s = 0.25;
  const auto corpus = generate_synthetic_corpus(spec);

  const auto split = split_speaker_independent(corpus, 0.2, 7);
  CHECK(split.test_speakers.size() == 1);
  CHECK(split.eval_speakers.size() == 1);
  CHECK(split.train_speakers.size() == 3);
  CHECK(split.train.size() + split.eval.size() + split.test.size() == corpus.size());

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = split_speaker_independent(corpus, 0.2, seed);
    std::set<std::string> tr, ev, te;
    for (const auto& u : s.train) tr.insert(u.speaker_id);
    for (const auto& u : s.eval) ev.insert(u.speaker_id);
    for (const auto& u : s.test) te.insert(u.speaker_id);
    for (const auto& id : te) {
      CHECK(tr.count(id) == 0);
      CHECK(ev.count(id) == 0);
    }
    for (const auto& id : ev) CHECK(tr.count(id) == 0);
    const auto again = split_speaker_independent(corpus, 0.2, seed);
    CHECK(again.test_speakers == s.test_speakers);
  }

  spec.num_speakers = 2;
  try {
    split_speaker_independent(generate_synthetic_corpus(spec), 0.2, 1);
    FAIL("expected TooFewSpeakers");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooFewSpeakers);
  }
}

TEST_CASE("label CSV loader") {
  st::TempDir dir("corpus_csv");
  Waveform w = st::random_waveform(1600, 1, 0.1);
  save_wav(w, dir / "a.wav");
  save_wav(w, dir / "b.wav");
  {
    std::ofstream f(dir / "labels.csv");
    f << "path,raw_label,speaker_id\n" << "a.wav,hap,s1\n" << "b.wav,Anger,s2\n";
  }
  const auto corpus = load_labeled_corpus(dir / "labels.csv", LabelScheme::kIemocap);
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].label == Valence::kPositive);
  CHECK(corpus[1].label == Valence::kNegative);
  CHECK(corpus[1].speaker_id == "s2");
  const auto manifest = corpus_manifest(corpus);
  CHECK(manifest.dump().find("s2") != std::string::npos);

  {
    std::ofstream f(dir / "bad.csv");
    f << "path,raw_label,speaker_id\n" << "a.wav,frustration,s1\n";
  }
  CHECK_THROWS_AS(load_labeled_corpus(dir / "bad.csv", LabelScheme::kIemocap), Error);
}
