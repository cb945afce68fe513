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

#ifndef SERFORGE_CORPUS_HPP_
#define SERFORGE_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "serforge/attack.hpp"
#include "serforge/audio.hpp"
#include "serforge/labels.hpp"

namespace serforge {

enum class ProvenanceKind { kClean, kAdversarial, kAugmented };

struct ProvenanceStep {
  ProvenanceKind kind = ProvenanceKind::kClean;
  NoiseKind noise_kind = NoiseKind::kUserSupplied;  // adversarial steps only
  double epsilon = 0.0;                             // adversarial steps only
  double noise_std = 0.0;                           // augmented steps only

  bool operator==(const ProvenanceStep&) const = default;
};

std::string to_string(const ProvenanceStep& step);

struct LabeledUtterance {
  std::string id;
  Waveform waveform;
  Valence label = Valence::kNegative;
  std::string speaker_id;
  // Transform chain, oldest first; always starts with a clean step.
  std::vector<ProvenanceStep> provenance{ProvenanceStep{}};
};

std::string provenance_string(const LabeledUtterance& u);

enum class LabelScheme { kIemocap, kFauAibo };

LabelScheme parse_label_scheme(std::string_view name);

// Binary valence mapping of emotion categories, case-insensitive. IEMOCAP's
// three-letter annotation codes (hap, exc, neu, ang, sad) are accepted as
// aliases. Throws kUnknownLabel for anything else.
Valence map_label(std::string_view raw, LabelScheme scheme);

struct CorpusSpec {
  int num_speakers = 5;
  int utterances_per_speaker = 40;
  double duration_s = 2.0;
  double class_separation = 2.0;
  double base_noise_variance = 1e-4;
  std::uint64_t seed = 0;
  int sample_rate = kCanonicalSampleRate;
  // Nominal peak amplitude of the voiced tone complex.
  double amplitude = 0.4;
  // Utterance levels are drawn uniformly within +-level_spread_db/2 of the
  // nominal amplitude.
  double level_spread_db = 16.0;
};

void validate(const CorpusSpec& spec);

// Synthetic two-class corpus. Each utterance is a harmonic tone complex
// framed by low-level background-only lead-in and tail:
//   positive: mean F0 140 + 80c + 30s Hz, rising contour, 4 Hz energy modulation
//   negative: mean F0 140 Hz, falling contour, flat energy
// where s = class_separation and c = min(1, s) scales every class difference,
// so for s >= 1 the positive mean is 220 + 30s Hz and for s = 0 both classes
// share one recipe. Per-speaker F0 offsets lie in +-15 Hz. Labels alternate
// within a speaker, starting positive.
std::vector<LabeledUtterance> generate_synthetic_corpus(const CorpusSpec& spec);

// Synthetic stand-ins for recorded background noise, normalised to an RMS
// of 0.1:
//   cafe:    pink noise with sparse short high-frequency transients
//   meeting: pink noise with 2-4 low-level harmonic voices switching on/off
//   station: brown noise with broadband rumble below 200 Hz
NoiseSource generate_noise_source(NoiseKind kind, double duration_s, std::uint64_t seed,
                                  int sample_rate = kCanonicalSampleRate);

struct CorpusSplit {
  std::vector<LabeledUtterance> train;
  std::vector<LabeledUtterance> eval;
  std::vector<LabeledUtterance> test;
  std::vector<std::string> train_speakers;
  std::vector<std::string> eval_speakers;
  std::vector<std::string> test_speakers;
};

// Speaker-disjoint split: round(test_fraction * S) speakers (at least one)
// are held out for test, one further speaker for eval, the rest train.
// With five speakers this is the four/one session protocol plus an eval
// speaker taken from the four. Requires at least three speakers.
CorpusSplit split_speaker_independent(const std::vector<LabeledUtterance>& corpus,
                                      double test_fraction, std::uint64_t seed);

// Reads a `path,raw_label,speaker_id` CSV (header required); relative paths
// resolve against the CSV's directory.
std::vector<LabeledUtterance> load_labeled_corpus(const std::filesystem::path& csv, LabelScheme scheme);

nlohmann::json corpus_manifest(const std::vector<LabeledUtterance>& corpus);

}  // namespace serforge

#endif  // SERFORGE_CORPUS_HPP_
