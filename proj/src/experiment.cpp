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

#include "serforge/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <unordered_map>

#include "serforge/error.hpp"
#include "serforge/format.hpp"
#include "serforge/json_io.hpp"
#include "serforge/random.hpp"

namespace serforge {

std::string defense_name(DefenseMethod m) {
  switch (m) {
    case DefenseMethod::kNone: return "none";
    case DefenseMethod::kAdversarialTraining: return "advtrain";
    case DefenseMethod::kRandomNoise: return "randnoise";
    case DefenseMethod::kGan: return "gan";
  }
  return "none";
}

DefenseMethod parse_defense(const std::string& name) {
  if (name == "none") return DefenseMethod::kNone;
  if (name == "advtrain") return DefenseMethod::kAdversarialTraining;
  if (name == "randnoise") return DefenseMethod::kRandomNoise;
  if (name == "gan") return DefenseMethod::kGan;
  throw Error(ErrorCode::kConfigError, "unknown defense '" + name + "'");
}

// ---- configuration ----------------------------------------------------

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kConfigError, message);
}

bool plain_field(const std::string& s) {
  return s.find_first_of(",\"\n\r") == std::string::npos;
}

std::string label_scheme_name(LabelScheme s) { return s == LabelScheme::kIemocap ? "iemocap" : "fau_aibo"; }

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

nlohmann::json train_to_json(const TrainConfig& t) {
  return {{"initial_lr", t.initial_lr}, {"halve_every", t.halve_every}, {"stop_lr", t.stop_lr},
          {"batch_size", t.batch_size}, {"max_epochs", t.max_epochs},   {"hidden1", t.hidden1},
          {"hidden2", t.hidden2},       {"optimizer", nn::optimizer_name(t.optimizer)},
          {"clip_norm", t.clip_norm},   {"ties_by_loss", t.ties_by_loss}};
}

TrainConfig train_from_json(const nlohmann::json& j, TrainConfig t) {
  read_if(j, "initial_lr", t.initial_lr);
  read_if(j, "halve_every", t.halve_every);
  read_if(j, "stop_lr", t.stop_lr);
  read_if(j, "batch_size", t.batch_size);
  read_if(j, "max_epochs", t.max_epochs);
  read_if(j, "hidden1", t.hidden1);
  read_if(j, "hidden2", t.hidden2);
  if (j.contains("optimizer")) t.optimizer = nn::parse_optimizer(j.at("optimizer").get<std::string>());
  read_if(j, "clip_norm", t.clip_norm);
  read_if(j, "ties_by_loss", t.ties_by_loss);
  return t;
}

nlohmann::json gan_to_json(const GanTrainConfig& g) {
  return {{"encoder_hidden", g.architecture.encoder_hidden},
          {"bottleneck", g.architecture.bottleneck},
          {"decoder_hidden", g.architecture.decoder_hidden},
          {"learning_rate", g.learning_rate},
          {"pretrain_learning_rate", g.pretrain_learning_rate},
          {"batch_size", g.batch_size},
          {"d_steps_per_g_step", g.d_steps_per_g_step},
          {"pretrain_epochs", g.pretrain_epochs},
          {"max_steps", g.max_steps},
          {"lambda_mse", g.lambda_mse},
          {"clip_norm", g.clip_norm},
          {"checkpoint_every", g.checkpoint_every}};
}

GanTrainConfig gan_from_json(const nlohmann::json& j, GanTrainConfig g) {
  read_if(j, "encoder_hidden", g.architecture.encoder_hidden);
  read_if(j, "bottleneck", g.architecture.bottleneck);
  read_if(j, "decoder_hidden", g.architecture.decoder_hidden);
  read_if(j, "learning_rate", g.learning_rate);
  read_if(j, "pretrain_learning_rate", g.pretrain_learning_rate);
  read_if(j, "batch_size", g.batch_size);
  read_if(j, "d_steps_per_g_step", g.d_steps_per_g_step);
  read_if(j, "pretrain_epochs", g.pretrain_epochs);
  read_if(j, "max_steps", g.max_steps);
  read_if(j, "lambda_mse", g.lambda_mse);
  read_if(j, "clip_norm", g.clip_norm);
  read_if(j, "checkpoint_every", g.checkpoint_every);
  return g;
}

nlohmann::json config_body(const ExperimentConfig& c) {
  nlohmann::json corpus = {{"num_speakers", c.corpus.num_speakers},
                           {"utterances_per_speaker", c.corpus.utterances_per_speaker},
                           {"duration_s", c.corpus.duration_s},
                           {"class_separation", c.corpus.class_separation},
                           {"base_noise_variance", c.corpus.base_noise_variance},
                           {"sample_rate", c.corpus.sample_rate},
                           {"amplitude", c.corpus.amplitude},
                           {"level_spread_db", c.corpus.level_spread_db},
                           {"label_scheme", label_scheme_name(c.label_scheme)}};
  if (c.corpus_csv) corpus["csv"] = c.corpus_csv->string();
  std::vector<std::string> kinds;
  for (NoiseKind k : c.noise_kinds) kinds.emplace_back(noise_kind_name(k));
  nlohmann::json files = nlohmann::json::object();
  for (const auto& [k, v] : c.noise_files) files[k] = v.string();
  return {{"dataset_tag", c.dataset_tag},
          {"corpus", corpus},
          {"test_fraction", c.test_fraction},
          {"features", to_json(c.features)},
          {"train", train_to_json(c.train)},
          {"noise_kinds", kinds},
          {"noise_files", files},
          {"noise_duration_s", c.noise_duration_s},
          {"epsilons", c.epsilons},
          {"attack_epsilon", c.attack_epsilon},
          {"mix_fractions", c.mix_fractions},
          {"comparison_mix_fraction", c.comparison_mix_fraction},
          {"random_noise_std", c.random_noise_std},
          {"gan", gan_to_json(c.gan)},
          {"seeds", c.seeds}};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  require(!c.dataset_tag.empty() && plain_field(c.dataset_tag), "dataset_tag must be a plain nonempty string");
  if (!c.corpus_csv) {
    try {
      validate(c.corpus);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigError, e.what());
    }
  }
  require(c.test_fraction > 0.0 && c.test_fraction < 1.0, "test_fraction must lie in (0, 1)");
  try {
    validate(c.features);
    validate(c.train);
    validate(c.gan);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  require(c.gan.architecture.input_dim == kNumDescriptors, "GAN input dimension must equal the descriptor count");
  require(!c.noise_kinds.empty(), "noise_kinds must be nonempty");
  for (NoiseKind k : c.noise_kinds) {
    require(k != NoiseKind::kUserSupplied || c.noise_files.count("user_supplied"),
            "noise kind user_supplied needs a noise file");
  }
  require(!c.epsilons.empty(), "epsilon list must be nonempty");
  for (double e : c.epsilons) require(std::isfinite(e) && e >= 0.0, "epsilon values must be >= 0");
  require(std::isfinite(c.attack_epsilon) && c.attack_epsilon >= 0.0, "attack_epsilon must be >= 0");
  require(c.noise_duration_s > 0.0, "noise_duration_s must be positive");
  require(!c.mix_fractions.empty(), "mix_fractions must be nonempty");
  for (double f : c.mix_fractions) require(f >= 0.0 && f <= 1.0, "mix fractions must lie in [0, 1]");
  require(c.comparison_mix_fraction >= 0.0 && c.comparison_mix_fraction <= 1.0,
          "comparison_mix_fraction must lie in [0, 1]");
  require(std::isfinite(c.random_noise_std) && c.random_noise_std >= 0.0, "random_noise_std must be >= 0");
  require(!c.seeds.empty(), "seed list must be nonempty");
  auto sorted = c.seeds;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "seeds must be distinct");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = config_body(c);
  j["output_dir"] = c.output_dir.string();
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    require(j.is_object(), "experiment config must be a JSON object");
    read_if(j, "dataset_tag", c.dataset_tag);
    if (j.contains("corpus")) {
      const auto& k = j.at("corpus");
      read_if(k, "num_speakers", c.corpus.num_speakers);
      read_if(k, "utterances_per_speaker", c.corpus.utterances_per_speaker);
      read_if(k, "duration_s", c.corpus.duration_s);
      read_if(k, "class_separation", c.corpus.class_separation);
      read_if(k, "base_noise_variance", c.corpus.base_noise_variance);
      read_if(k, "sample_rate", c.corpus.sample_rate);
      read_if(k, "amplitude", c.corpus.amplitude);
      read_if(k, "level_spread_db", c.corpus.level_spread_db);
      if (k.contains("csv")) c.corpus_csv = k.at("csv").get<std::string>();
      if (k.contains("label_scheme")) c.label_scheme = parse_label_scheme(k.at("label_scheme").get<std::string>());
    }
    read_if(j, "test_fraction", c.test_fraction);
    if (j.contains("features")) c.features = frame_config_from_json(j.at("features"), c.features);
    if (j.contains("train")) c.train = train_from_json(j.at("train"), c.train);
    if (j.contains("noise_kinds")) {
      c.noise_kinds.clear();
      for (const auto& name : j.at("noise_kinds")) {
        const auto kind = parse_noise_kind(name.get<std::string>());
        require(kind.has_value(), "unknown noise kind '" + name.get<std::string>() + "'");
        c.noise_kinds.push_back(*kind);
      }
    }
    if (j.contains("noise_files")) {
      for (const auto& [k, v] : j.at("noise_files").items()) {
        require(parse_noise_kind(k).has_value(), "unknown noise kind '" + k + "' in noise_files");
        c.noise_files[k] = v.get<std::string>();
      }
    }
    read_if(j, "noise_duration_s", c.noise_duration_s);
    read_if(j, "epsilons", c.epsilons);
    read_if(j, "attack_epsilon", c.attack_epsilon);
    read_if(j, "mix_fractions", c.mix_fractions);
    read_if(j, "comparison_mix_fraction", c.comparison_mix_fraction);
    read_if(j, "random_noise_std", c.random_noise_std);
    if (j.contains("gan")) c.gan = gan_from_json(j.at("gan"), c.gan);
    read_if(j, "seeds", c.seeds);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("experiment config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    throw Error(ErrorCode::kConfigError, e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json_file(path.string()));
}

std::string config_hash(const ExperimentConfig& config) {
  return hex64(fnv1a64(config_body(config).dump()));
}

// ---- report lookups ---------------------------------------------------

const ExperimentRow* find_row(const ExperimentReport& report, const std::string& noise_kind, double epsilon,
                              const std::string& defense, double mix_fraction, std::uint64_t seed) {
  for (const auto& r : report.rows) {
    if (r.noise_kind == noise_kind && r.epsilon == epsilon && r.defense == defense &&
        r.mix_fraction == mix_fraction && r.seed == seed) {
      return &r;
    }
  }
  return nullptr;
}

std::optional<double> mean_error(const ExperimentReport& report, const std::string& noise_kind, double epsilon,
                                 const std::string& defense, double mix_fraction) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : report.rows) {
    if (r.noise_kind == noise_kind && r.epsilon == epsilon && r.defense == defense &&
        r.mix_fraction == mix_fraction) {
      sum += r.error_rate;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// ---- session ------------------------------------------------------------

namespace {

std::uint64_t tag(std::string_view s) { return fnv1a64(s); }

std::uint64_t waveform_hash(std::span<const LabeledUtterance> set) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& u : set) {
    mix(u.id.data(), u.id.size());
    mix(u.waveform.samples.data(), u.waveform.samples.size() * sizeof(double));
  }
  return h;
}

struct Evaluation {
  Metrics metrics;
  double attack_success_rate = 0.0;
};

Evaluation evaluate_pair(const ModelParams& model, std::span<const LabeledSequence> clean,
                         std::span<const LabeledSequence> attacked) {
  Evaluation ev;
  ev.metrics = evaluate(model, attacked);
  const auto pc = predict(model, clean);
  const auto pa = predict(model, attacked);
  long correct = 0;
  long flipped = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (pc[i] != class_index(clean[i].label)) continue;
    ++correct;
    if (pa[i] != class_index(attacked[i].label)) ++flipped;
  }
  ev.attack_success_rate = correct ? 100.0 * static_cast<double>(flipped) / static_cast<double>(correct) : 0.0;
  return ev;
}

}  // namespace

struct ExperimentSession::SeedState {
  std::uint64_t seed = 0;
  CorpusSplit split;
  StandardizationStats stats;
  std::vector<LabeledSequence> train, eval, test;
  std::optional<ModelCheckpoint> baseline;
  std::map<NoiseKind, NoiseSource> sources;
  std::map<std::pair<NoiseKind, double>, std::vector<LabeledUtterance>> test_attacks;
  std::map<std::pair<NoiseKind, double>, std::vector<LabeledSequence>> test_attack_features;
  std::map<std::pair<NoiseKind, double>, std::uint64_t> test_attack_hashes;
  std::map<NoiseKind, std::vector<LabeledUtterance>> train_pools;
  std::map<NoiseKind, std::vector<LabeledSequence>> train_pool_features;
  std::map<std::pair<NoiseKind, double>, ModelParams> advtrain_models;
  std::optional<ModelParams> randnoise_model;
  std::optional<GanTrainResult> gan;
};

ExperimentSession::ExperimentSession(ExperimentConfig config) : config_(std::move(config)) { validate(config_); }
ExperimentSession::~ExperimentSession() = default;

ExperimentSession::SeedState& ExperimentSession::state(std::uint64_t seed) {
  auto it = states_.find(seed);
  if (it != states_.end()) return *it->second;
  auto st = std::make_unique<SeedState>();
  st->seed = seed;
  std::vector<LabeledUtterance> corpus;
  if (config_.corpus_csv) {
    corpus = load_labeled_corpus(*config_.corpus_csv, config_.label_scheme);
  } else {
    CorpusSpec spec = config_.corpus;
    spec.seed = seed;
    corpus = generate_synthetic_corpus(spec);
  }
  st->split = split_speaker_independent(corpus, config_.test_fraction, seed);
  auto feats = [&](const std::vector<LabeledUtterance>& us) {
    std::vector<LabeledSequence> out;
    out.reserve(us.size());
    for (const auto& u : us) out.push_back({extract_lld(u.waveform, config_.features), u.label});
    return out;
  };
  st->train = feats(st->split.train);
  st->eval = feats(st->split.eval);
  st->test = feats(st->split.test);
  std::vector<FeatureSequence> raw;
  raw.reserve(st->train.size());
  for (const auto& x : st->train) raw.push_back(x.seq);
  st->stats = fit_standardization(raw);
  for (auto* set : {&st->train, &st->eval, &st->test}) {
    for (auto& x : *set) x.seq = apply_standardization(x.seq, st->stats);
  }
  return *states_.emplace(seed, std::move(st)).first->second;
}

namespace {

TrainConfig seeded(const TrainConfig& base, std::uint64_t seed) {
  TrainConfig t = base;
  t.seed = seed;
  return t;
}

std::vector<LabeledSequence> featurize(std::span<const LabeledUtterance> us, const FrameConfig& fc,
                                       const StandardizationStats& stats) {
  std::vector<LabeledSequence> out;
  out.reserve(us.size());
  for (const auto& u : us) out.push_back({apply_standardization(extract_lld(u.waveform, fc), stats), u.label});
  return out;
}

}  // namespace

const ModelCheckpoint& ExperimentSession::baseline(std::uint64_t seed) {
  SeedState& st = state(seed);
  if (!st.baseline) {
    TrainResult r = train(st.train, st.eval, seeded(config_.train, seed));
    st.baseline = ModelCheckpoint{std::move(r.params), st.stats, config_.features};
  }
  return *st.baseline;
}

Metrics ExperimentSession::clean_test_metrics(std::uint64_t seed) {
  return evaluate(baseline(seed).params, state(seed).test);
}

namespace {

NoiseSource make_source(const ExperimentConfig& config, NoiseKind kind, std::uint64_t seed, int sample_rate) {
  const std::string name(noise_kind_name(kind));
  const auto file = config.noise_files.find(name);
  if (file != config.noise_files.end()) {
    Waveform w = load_wav(file->second);
    if (w.sample_rate != sample_rate) {
      throw Error(ErrorCode::kSampleRateMismatch, "noise file " + file->second.string() + " is not at " +
                                                      std::to_string(sample_rate) + " Hz");
    }
    return {std::move(w), kind};
  }
  return generate_noise_source(kind, config.noise_duration_s,
                               derive_seed(seed, {tag("noise"), static_cast<std::uint64_t>(kind)}),
                               sample_rate);
}

}  // namespace

const NoiseSource& ExperimentSession::source(SeedState& st, NoiseKind kind) {
  auto it = st.sources.find(kind);
  if (it == st.sources.end()) {
    const int sr = st.split.test.front().waveform.sample_rate;
    it = st.sources.emplace(kind, make_source(config_, kind, st.seed, sr)).first;
  }
  return it->second;
}

const std::vector<LabeledSequence>& ExperimentSession::attacked_test(SeedState& st, NoiseKind kind,
                                                                     double epsilon) {
  const auto key = std::make_pair(kind, epsilon);
  auto it = st.test_attack_features.find(key);
  if (it == st.test_attack_features.end()) {
    // The segment seed does not depend on epsilon, so every epsilon scales
    // the same perturbation.
    auto adv = attack_dataset(st.split.test, source(st, kind), epsilon, derive_seed(st.seed, {tag("test-attack")}),
                              config_.features);
    auto feats = featurize(adv, config_.features, st.stats);
    st.test_attack_hashes[key] = waveform_hash(adv);
    st.test_attacks[key] = std::move(adv);
    it = st.test_attack_features.emplace(key, std::move(feats)).first;
  }
  return it->second;
}

const std::vector<LabeledSequence>& ExperimentSession::train_pool(SeedState& st, NoiseKind kind) {
  auto it = st.train_pool_features.find(kind);
  if (it == st.train_pool_features.end()) {
    auto adv = attack_dataset(st.split.train, source(st, kind), config_.attack_epsilon,
                              derive_seed(st.seed, {tag("train-attack")}), config_.features);
    auto feats = featurize(adv, config_.features, st.stats);
    st.train_pools[kind] = std::move(adv);
    it = st.train_pool_features.emplace(kind, std::move(feats)).first;
  }
  return it->second;
}

const ModelParams& ExperimentSession::advtrain_model(SeedState& st, NoiseKind kind, double fraction) {
  const auto key = std::make_pair(kind, fraction);
  auto it = st.advtrain_models.find(key);
  if (it != st.advtrain_models.end()) return it->second;
  const auto& pool_feats = train_pool(st, kind);
  const auto& pool = st.train_pools.at(kind);
  const auto mixed = mix_adversarial(st.split.train, pool, MixSpec{fraction}, derive_seed(st.seed, {tag("mix")}));
  if (mixed.size() == st.split.train.size()) {
    return st.advtrain_models.emplace(key, baseline(st.seed).params).first->second;
  }
  std::unordered_map<std::string, std::size_t> pool_index;
  for (std::size_t i = 0; i < pool.size(); ++i) pool_index.emplace(pool[i].id, i);
  std::vector<LabeledSequence> train_set(st.train.begin(), st.train.end());
  for (std::size_t i = st.split.train.size(); i < mixed.size(); ++i) {
    train_set.push_back(pool_feats[pool_index.at(mixed[i].id)]);
  }
  TrainResult r = train(train_set, st.eval, seeded(config_.train, st.seed));
  return st.advtrain_models.emplace(key, std::move(r.params)).first->second;
}

const ModelParams& ExperimentSession::randnoise_model(SeedState& st) {
  if (!st.randnoise_model) {
    const auto noisy = augment_random_noise(st.split.train, config_.random_noise_std,
                                            derive_seed(st.seed, {tag("randnoise")}));
    const auto feats = featurize(noisy, config_.features, st.stats);
    st.randnoise_model = train(feats, st.eval, seeded(config_.train, st.seed)).params;
  }
  return *st.randnoise_model;
}

const GanTrainResult& ExperimentSession::gan(SeedState& st) {
  if (!st.gan) {
    std::vector<SequencePair> pairs;
    for (NoiseKind kind : config_.noise_kinds) {
      const auto& pool = train_pool(st, kind);
      for (std::size_t i = 0; i < pool.size(); ++i) pairs.push_back({pool[i].seq, st.train[i].seq});
    }
    GanTrainConfig gc = config_.gan;
    gc.seed = st.seed;
    st.gan = gan_train(pairs, gc);
  }
  return *st.gan;
}

double ExperimentSession::median_snr(std::uint64_t seed, NoiseKind kind, double epsilon) {
  SeedState& st = state(seed);
  attacked_test(st, kind, epsilon);
  const auto& adv = st.test_attacks.at({kind, epsilon});
  std::vector<double> snr;
  snr.reserve(adv.size());
  for (std::size_t i = 0; i < adv.size(); ++i) {
    snr.push_back(perceptibility_snr(st.split.test[i].waveform, adv[i].waveform));
  }
  std::sort(snr.begin(), snr.end());
  const std::size_t n = snr.size();
  return n % 2 ? snr[n / 2] : 0.5 * (snr[n / 2 - 1] + snr[n / 2]);
}

const GanTrainResult* ExperimentSession::gan_result(std::uint64_t seed) const {
  auto it = states_.find(seed);
  if (it == states_.end() || !it->second->gan) return nullptr;
  return &*it->second->gan;
}

nlohmann::json ExperimentSession::metadata(const std::string& experiment, const std::string& started) const {
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& [seed, st] : states_) {
    for (const auto& [key, h] : st->test_attack_hashes) {
      hashes[std::to_string(seed)][std::string(noise_kind_name(key.first)) + "@" + format_double(key.second)] =
          hex64(h);
    }
  }
  return {{"experiment", experiment},          {"version", kVersion},
          {"config_hash", config_hash(config_)}, {"config", to_json(config_)},
          {"attacked_test_hashes", hashes},      {"started_utc", started},
          {"finished_utc", utc_now()}};
}

namespace {

ExperimentRow make_row(const ExperimentConfig& c, NoiseKind kind, double eps, const std::string& defense,
                       double fraction, std::uint64_t seed, const Evaluation& ev) {
  return {c.dataset_tag, std::string(noise_kind_name(kind)), eps, defense, fraction, seed,
          ev.metrics.error_rate, ev.metrics.unweighted_accuracy, ev.attack_success_rate};
}

}  // namespace

ExperimentReport ExperimentSession::run_epsilon_sweep() {
  ExperimentReport report;
  report.experiment = "epsilon_sweep";
  const std::string started = utc_now();
  for (std::uint64_t seed : config_.seeds) {
    SeedState& st = state(seed);
    const ModelParams& model = baseline(seed).params;
    for (NoiseKind kind : config_.noise_kinds) {
      for (double eps : config_.epsilons) {
        report.rows.push_back(make_row(config_, kind, eps, "none", 0.0, seed,
                                       evaluate_pair(model, st.test, attacked_test(st, kind, eps))));
      }
    }
  }
  report.metadata = metadata(report.experiment, started);
  return report;
}

ExperimentReport ExperimentSession::run_adversarial_training_curve() {
  ExperimentReport report;
  report.experiment = "adversarial_training";
  const std::string started = utc_now();
  const double eps = config_.attack_epsilon;
  for (std::uint64_t seed : config_.seeds) {
    SeedState& st = state(seed);
    for (NoiseKind kind : config_.noise_kinds) {
      const auto& attacked = attacked_test(st, kind, eps);
      for (double f : config_.mix_fractions) {
        const ModelParams& model = advtrain_model(st, kind, f);
        report.rows.push_back(make_row(config_, kind, eps, "advtrain", f, seed, evaluate_pair(model, st.test, attacked)));
      }
    }
  }
  report.metadata = metadata(report.experiment, started);
  return report;
}

ExperimentReport ExperimentSession::run_defense_comparison(std::vector<DefenseMethod> methods) {
  if (methods.empty()) {
    methods = {DefenseMethod::kRandomNoise, DefenseMethod::kAdversarialTraining, DefenseMethod::kGan};
  }
  methods.erase(std::remove(methods.begin(), methods.end(), DefenseMethod::kNone), methods.end());
  methods.insert(methods.begin(), DefenseMethod::kNone);

  ExperimentReport report;
  report.experiment = "defense_comparison";
  const std::string started = utc_now();
  const double eps = config_.attack_epsilon;
  for (std::uint64_t seed : config_.seeds) {
    SeedState& st = state(seed);
    for (NoiseKind kind : config_.noise_kinds) {
      const auto& attacked = attacked_test(st, kind, eps);
      const std::uint64_t expected = st.test_attack_hashes.at({kind, eps});
      for (DefenseMethod m : methods) {
        Evaluation ev;
        double fraction = 0.0;
        switch (m) {
          case DefenseMethod::kNone:
            ev = evaluate_pair(baseline(seed).params, st.test, attacked);
            break;
          case DefenseMethod::kRandomNoise:
            ev = evaluate_pair(randnoise_model(st), st.test, attacked);
            break;
          case DefenseMethod::kAdversarialTraining:
            fraction = config_.comparison_mix_fraction;
            ev = evaluate_pair(advtrain_model(st, kind, fraction), st.test, attacked);
            break;
          case DefenseMethod::kGan: {
            const Generator& g = gan(st).params.generator;
            auto clean = st.test;
            auto cleaned = attacked;
            for (auto& x : clean) x.seq = gan_clean(g, x.seq);
            for (auto& x : cleaned) x.seq = gan_clean(g, x.seq);
            ev = evaluate_pair(baseline(seed).params, clean, cleaned);
            break;
          }
        }
        if (waveform_hash(st.test_attacks.at({kind, eps})) != expected) {
          throw Error(ErrorCode::kInvalidArgument, "attacked test set changed between defenses");
        }
        report.rows.push_back(make_row(config_, kind, eps, defense_name(m), fraction, seed, ev));
      }
    }
  }
  report.metadata = metadata(report.experiment, started);
  return report;
}

ExperimentReport run_epsilon_sweep(const ExperimentConfig& config) {
  return ExperimentSession(config).run_epsilon_sweep();
}

ExperimentReport run_adversarial_training_curve(const ExperimentConfig& config) {
  return ExperimentSession(config).run_adversarial_training_curve();
}

ExperimentReport run_defense_comparison(const ExperimentConfig& config) {
  return ExperimentSession(config).run_defense_comparison();
}

}  // namespace serforge
