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

#include "serforge/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "serforge/error.hpp"
#include "serforge/format.hpp"
#include "serforge/random.hpp"

namespace serforge {

std::string to_string(const ProvenanceStep& step) {
  switch (step.kind) {
    case ProvenanceKind::kClean: return "clean";
    case ProvenanceKind::kAdversarial:
      return "adversarial(" + std::string(noise_kind_name(step.noise_kind)) + "," +
             format_double(step.epsilon) + ")";
    case ProvenanceKind::kAugmented: return "augmented(" + format_double(step.noise_std) + ")";
  }
  return "clean";
}

std::string provenance_string(const LabeledUtterance& u) {
  std::string out;
  for (const auto& step : u.provenance) {
    if (!out.empty()) out += ">";
    out += to_string(step);
  }
  return out;
}

LabelScheme parse_label_scheme(std::string_view name) {
  if (name == "iemocap") return LabelScheme::kIemocap;
  if (name == "fau_aibo") return LabelScheme::kFauAibo;
  throw Error(ErrorCode::kConfigError, "unknown label scheme '" + std::string(name) + "'");
}

Valence map_label(std::string_view raw, LabelScheme scheme) {
  std::string key;
  for (char c : raw) {
    if (!std::isspace(static_cast<unsigned char>(c))) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  static const std::map<std::string, Valence> iemocap = {
      {"happiness", Valence::kPositive}, {"excited", Valence::kPositive},
      {"exited", Valence::kPositive},    {"neutral", Valence::kPositive},
      {"anger", Valence::kNegative},     {"sadness", Valence::kNegative},
      {"hap", Valence::kPositive},       {"exc", Valence::kPositive},
      {"neu", Valence::kPositive},       {"ang", Valence::kNegative},
      {"sad", Valence::kNegative}};
  static const std::map<std::string, Valence> fau_aibo = {
      {"neutral", Valence::kPositive}, {"motherese", Valence::kPositive},
      {"joyful", Valence::kPositive},  {"angry", Valence::kNegative},
      {"touchy", Valence::kNegative},  {"reprimanding", Valence::kNegative},
      {"emphatic", Valence::kNegative}};
  const auto& table = scheme == LabelScheme::kIemocap ? iemocap : fau_aibo;
  const auto it = table.find(key);
  if (it == table.end()) {
    throw Error(ErrorCode::kUnknownLabel, "'" + std::string(raw) + "' has no valence mapping in " +
                                              (scheme == LabelScheme::kIemocap ? "iemocap" : "fau_aibo"));
  }
  return it->second;
}

void validate(const CorpusSpec& spec) {
  if (spec.num_speakers <= 0 || spec.utterances_per_speaker <= 0 || !(spec.duration_s > 0.0) ||
      !(spec.class_separation >= 0.0) || !(spec.base_noise_variance >= 0.0) || spec.sample_rate <= 0 ||
      !(spec.amplitude > 0.0) || !(spec.level_spread_db >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "corpus spec fields must be positive");
  }
}

namespace {

constexpr int kHarmonics = 5;
constexpr double kRampSeconds = 0.02;

// Raised-cosine fade over the first and last `ramp` samples of [0, n).
double fade(std::size_t i, std::size_t n, std::size_t ramp) {
  if (ramp == 0) return 1.0;
  const std::size_t edge = std::min(i, n - 1 - i);
  if (edge >= ramp) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / static_cast<double>(ramp));
}

double harmonic_norm() {
  double s = 0.0;
  for (int k = 1; k <= kHarmonics; ++k) s += 1.0 / k;
  return s;
}

Waveform synthesize_utterance(const CorpusSpec& spec, Valence label, double speaker_offset,
                              double speaker_gain, Rng& rng) {
  const int sr = spec.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * sr));
  const double contrast = std::min(1.0, spec.class_separation);
  const bool positive = label == Valence::kPositive;

  const auto lead = static_cast<std::size_t>(n * rng.uniform(0.125, 0.175));
  const auto tail = static_cast<std::size_t>(n * rng.uniform(0.125, 0.175));
  const std::size_t voiced = n - lead - tail;
  const double mean_f0 = 140.0 + (positive ? 80.0 * contrast + 30.0 * spec.class_separation : 0.0) +
                         speaker_offset + rng.uniform(-8.0, 8.0);
  const double slope = (positive ? 40.0 : -40.0) * contrast;
  const double mod_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double norm = harmonic_norm();
  const double level = std::pow(10.0, rng.uniform(-0.5, 0.5) * spec.level_spread_db / 20.0);
  const auto ramp = static_cast<std::size_t>(kRampSeconds * sr);

  Waveform w;
  w.sample_rate = sr;
  w.samples.assign(n, 0.0);
  for (std::size_t i = 0; i < voiced; ++i) {
    const double pos = static_cast<double>(i) / static_cast<double>(voiced);
    const double t = static_cast<double>(i) / sr;
    const double f0 = mean_f0 + slope * (pos - 0.5);
    phase += 2.0 * std::numbers::pi * f0 / sr;
    double tone = 0.0;
    for (int k = 1; k <= kHarmonics; ++k) tone += std::sin(k * phase) / k;
    const double energy =
        positive ? 1.0 + 0.5 * contrast * std::sin(2.0 * std::numbers::pi * 4.0 * t + mod_phase) : 1.0;
    w.samples[lead + i] = spec.amplitude * level * speaker_gain * energy * fade(i, voiced, ramp) * tone / norm;
  }
  const double sigma = std::sqrt(spec.base_noise_variance);
  for (double& s : w.samples) s += sigma * rng.normal();
  clip_in_place(w);
  return w;
}

}  // namespace

std::vector<LabeledUtterance> generate_synthetic_corpus(const CorpusSpec& spec) {
  validate(spec);
  std::vector<LabeledUtterance> corpus;
  corpus.reserve(static_cast<std::size_t>(spec.num_speakers) * spec.utterances_per_speaker);
  for (int p = 0; p < spec.num_speakers; ++p) {
    Rng speaker_rng(derive_seed(spec.seed, {0x5350, static_cast<std::uint64_t>(p)}));
    const double offset = speaker_rng.uniform(-15.0, 15.0);
    const double gain = speaker_rng.uniform(0.8, 1.2);
    const std::string speaker = "spk" + std::to_string(p);
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(u)}));
      LabeledUtterance item;
      item.label = u % 2 == 0 ? Valence::kPositive : Valence::kNegative;
      item.speaker_id = speaker;
      item.id = speaker + "_u" + std::to_string(u);
      item.waveform = synthesize_utterance(spec, item.label, offset, gain, rng);
      corpus.push_back(std::move(item));
    }
  }
  return corpus;
}

namespace {

class PinkFilter {
 public:
  double operator()(double white) {
    b0_ = 0.99765 * b0_ + white * 0.0990460;
    b1_ = 0.96300 * b1_ + white * 0.2965164;
    b2_ = 0.57000 * b2_ + white * 1.0526913;
    return b0_ + b1_ + b2_ + white * 0.1848;
  }

 private:
  double b0_ = 0.0, b1_ = 0.0, b2_ = 0.0;
};

double rms(const std::vector<double>& v) {
  double acc = 0.0;
  for (double s : v) acc += s * s;
  return std::sqrt(acc / static_cast<double>(v.size()));
}

void scale_to_rms(std::vector<double>& v, double target) {
  const double r = rms(v);
  if (r > 0.0) {
    for (double& s : v) s *= target / r;
  }
}

std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  PinkFilter pink;
  std::vector<double> out(n);
  for (auto& s : out) s = pink(rng.normal());
  return out;
}

void add_transients(std::vector<double>& bed, int sr, Rng& rng) {
  const double bed_rms = rms(bed);
  const double rate = 3.0;  // bursts per second
  const auto burst_len = static_cast<std::size_t>(0.008 * sr);
  for (std::size_t i = 0; i < bed.size(); ++i) {
    if (rng.uniform() >= rate / sr) continue;
    const double freq = rng.uniform(2000.0, 5000.0);
    const double amp = bed_rms * rng.uniform(1.5, 3.0);
    for (std::size_t j = 0; j < burst_len && i + j < bed.size(); ++j) {
      const double t = static_cast<double>(j) / sr;
      bed[i + j] += amp * std::exp(-t / 0.002) *
                    (0.7 * std::sin(2.0 * std::numbers::pi * freq * t) + 0.3 * rng.normal());
    }
  }
}

void add_voices(std::vector<double>& bed, int sr, Rng& rng) {
  const double level = 0.5 * rms(bed);
  const int voices = 2 + static_cast<int>(rng.below(3));
  for (int v = 0; v < voices; ++v) {
    const double f0 = rng.uniform(100.0, 250.0);
    const double vibrato = rng.uniform(3.0, 6.0);
    double phase = 0.0;
    std::size_t i = static_cast<std::size_t>(rng.uniform(0.0, 0.8) * sr);
    while (i < bed.size()) {
      const auto on = static_cast<std::size_t>(rng.uniform(0.3, 1.0) * sr);
      for (std::size_t j = 0; j < on && i + j < bed.size(); ++j) {
        const double t = static_cast<double>(i + j) / sr;
        const double f = f0 * (1.0 + 0.03 * std::sin(2.0 * std::numbers::pi * vibrato * t));
        phase += 2.0 * std::numbers::pi * f / sr;
        double tone = 0.0;
        for (int k = 1; k <= 6; ++k) tone += std::sin(k * phase) / k;
        bed[i + j] += level * fade(j, on, static_cast<std::size_t>(0.02 * sr)) * tone / 2.45;
      }
      i += on + static_cast<std::size_t>(rng.uniform(0.2, 0.8) * sr);
    }
  }
}

std::vector<double> station_noise(std::size_t n, int sr, Rng& rng) {
  std::vector<double> brown(n), rumble(n);
  double b = 0.0;
  for (auto& s : brown) {
    b = 0.995 * b + 0.1 * rng.normal();
    s = b;
  }
  const double a = std::exp(-2.0 * std::numbers::pi * 80.0 / sr);
  double l1 = 0.0, l2 = 0.0;
  for (auto& s : rumble) {
    l1 = a * l1 + (1.0 - a) * rng.normal();
    l2 = a * l2 + (1.0 - a) * l1;
    s = l2;
  }
  scale_to_rms(rumble, 0.6 * rms(brown));
  for (std::size_t i = 0; i < n; ++i) brown[i] += rumble[i];
  return brown;
}

}  // namespace

NoiseSource generate_noise_source(NoiseKind kind, double duration_s, std::uint64_t seed, int sample_rate) {
  if (!(duration_s > 0.0) || sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "noise duration and sample rate must be positive");
  }
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(duration_s * sample_rate)));
  Rng rng(derive_seed(seed, {0x4e53, static_cast<std::uint64_t>(kind)}));
  NoiseSource src;
  src.kind = kind;
  src.audio.sample_rate = sample_rate;
  switch (kind) {
    case NoiseKind::kCafe:
      src.audio.samples = pink_noise(n, rng);
      add_transients(src.audio.samples, sample_rate, rng);
      break;
    case NoiseKind::kMeeting:
      src.audio.samples = pink_noise(n, rng);
      add_voices(src.audio.samples, sample_rate, rng);
      break;
    case NoiseKind::kStation:
      src.audio.samples = station_noise(n, sample_rate, rng);
      break;
    case NoiseKind::kUserSupplied:
      throw Error(ErrorCode::kInvalidArgument, "user-supplied noise is loaded from a file");
  }
  // Remove the DC wander of the integrated components before normalising.
  double mean = 0.0;
  for (double s : src.audio.samples) mean += s;
  mean /= static_cast<double>(n);
  for (double& s : src.audio.samples) s -= mean;
  scale_to_rms(src.audio.samples, 0.1);
  clip_in_place(src.audio);
  return src;
}

CorpusSplit split_speaker_independent(const std::vector<LabeledUtterance>& corpus, double test_fraction,
                                      std::uint64_t seed) {
  std::set<std::string> unique;
  for (const auto& u : corpus) unique.insert(u.speaker_id);
  std::vector<std::string> speakers(unique.begin(), unique.end());
  if (speakers.size() < 3) {
    throw Error(ErrorCode::kTooFewSpeakers, "speaker-independent split needs at least 3 speakers, got " +
                                                std::to_string(speakers.size()));
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::kConfigError, "test fraction must lie in (0, 1)");
  }
  Rng rng(derive_seed(seed, {0x5350554c}));
  rng.shuffle(speakers.begin(), speakers.end());
  const auto s = static_cast<long>(speakers.size());
  const long n_test = std::clamp<long>(std::lround(test_fraction * static_cast<double>(s)), 1, s - 2);

  CorpusSplit split;
  split.test_speakers.assign(speakers.begin(), speakers.begin() + n_test);
  split.eval_speakers.assign(speakers.begin() + n_test, speakers.begin() + n_test + 1);
  split.train_speakers.assign(speakers.begin() + n_test + 1, speakers.end());
  for (auto* list : {&split.test_speakers, &split.eval_speakers, &split.train_speakers}) {
    std::sort(list->begin(), list->end());
  }
  auto in = [](const std::vector<std::string>& list, const std::string& id) {
    return std::binary_search(list.begin(), list.end(), id);
  };
  for (const auto& u : corpus) {
    if (in(split.test_speakers, u.speaker_id)) {
      split.test.push_back(u);
    } else if (in(split.eval_speakers, u.speaker_id)) {
      split.eval.push_back(u);
    } else {
      split.train.push_back(u);
    }
  }
  return split;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back().push_back(c);
    }
  }
  return fields;
}

}  // namespace

std::vector<LabeledUtterance> load_labeled_corpus(const std::filesystem::path& csv, LabelScheme scheme) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"path", "raw_label", "speaker_id"}) {
    throw Error(ErrorCode::kConfigError, csv.string() + ": header must be path,raw_label,speaker_id");
  }
  std::vector<LabeledUtterance> corpus;
  const std::filesystem::path base = csv.parent_path();
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) throw Error(ErrorCode::kConfigError, csv.string() + ": malformed row '" + line + "'");
    std::filesystem::path p = fields[0];
    if (p.is_relative()) p = base / p;
    LabeledUtterance u;
    u.id = fields[0];
    u.label = map_label(fields[1], scheme);
    u.speaker_id = fields[2];
    u.waveform = load_wav(p);
    corpus.push_back(std::move(u));
  }
  if (corpus.empty()) throw Error(ErrorCode::kEmptyDataset, csv.string() + " lists no utterances");
  return corpus;
}

nlohmann::json corpus_manifest(const std::vector<LabeledUtterance>& corpus) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& u : corpus) {
    items.push_back({{"id", u.id},
                     {"speaker_id", u.speaker_id},
                     {"label", valence_name(u.label)},
                     {"num_samples", u.waveform.size()},
                     {"sample_rate", u.waveform.sample_rate},
                     {"provenance", provenance_string(u)}});
  }
  return {{"format", "serforge-corpus-manifest"}, {"version", 1}, {"utterances", std::move(items)}};
}

}  // namespace serforge
