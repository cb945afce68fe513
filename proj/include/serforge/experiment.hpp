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

#ifndef SERFORGE_EXPERIMENT_HPP_
#define SERFORGE_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "serforge/attack.hpp"
#include "serforge/classifier.hpp"
#include "serforge/corpus.hpp"
#include "serforge/defenses.hpp"

namespace serforge {

inline constexpr const char* kVersion = "serforge 0.1.0";

enum class DefenseMethod { kNone, kAdversarialTraining, kRandomNoise, kGan };

std::string defense_name(DefenseMethod m);
DefenseMethod parse_defense(const std::string& name);

struct ExperimentConfig {
  std::string dataset_tag = "synthetic";
  CorpusSpec corpus{};
  // When set, the corpus is read from this label CSV instead of synthesised.
  std::optional<std::filesystem::path> corpus_csv;
  LabelScheme label_scheme = LabelScheme::kIemocap;
  double test_fraction = 0.2;
  FrameConfig features{1024, 512, WindowKind::kHann};
  TrainConfig train{};

  std::vector<NoiseKind> noise_kinds{NoiseKind::kCafe, NoiseKind::kMeeting, NoiseKind::kStation};
  // Recorded noise per kind name; kinds without a file use the synthetic source.
  std::map<std::string, std::filesystem::path> noise_files;
  double noise_duration_s = 30.0;
  std::vector<double> epsilons{0.0, 0.5, 1.0, 1.5, 2.0};
  // Perturbation factor of the adversarial examples used by the defenses.
  double attack_epsilon = 2.0;

  std::vector<double> mix_fractions{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double comparison_mix_fraction = 1.0;
  double random_noise_std = 0.01;
  GanTrainConfig gan{};

  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::filesystem::path output_dir = "serforge_out";
};

void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);
// Missing keys keep their defaults; type errors and bad values raise kConfigError.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct ExperimentRow {
  std::string dataset_tag;
  std::string noise_kind;
  double epsilon = 0.0;
  std::string defense;
  double mix_fraction = 0.0;
  std::uint64_t seed = 0;
  double error_rate = 0.0;
  double ua = 0.0;
  double attack_success_rate = 0.0;  // percent of clean-correct items flipped

  bool operator==(const ExperimentRow&) const = default;
};

struct ExperimentReport {
  std::string experiment;  // epsilon_sweep | adversarial_training | defense_comparison
  std::vector<ExperimentRow> rows;
  nlohmann::json metadata = nlohmann::json::object();
};

// Row lookup by key; nullptr when absent.
const ExperimentRow* find_row(const ExperimentReport& report, const std::string& noise_kind,
                              double epsilon, const std::string& defense, double mix_fraction,
                              std::uint64_t seed);

// Mean over the seeds present for a key; nullopt when no row matches.
std::optional<double> mean_error(const ExperimentReport& report, const std::string& noise_kind,
                                 double epsilon, const std::string& defense, double mix_fraction);

// Per-seed pipeline state shared by the experiments: corpus, split, features,
// baseline model, noise sources and cached attacked sets. Work is done lazily.
class ExperimentSession {
 public:
  explicit ExperimentSession(ExperimentConfig config);
  ~ExperimentSession();
  ExperimentSession(const ExperimentSession&) = delete;
  ExperimentSession& operator=(const ExperimentSession&) = delete;

  const ExperimentConfig& config() const { return config_; }

  ExperimentReport run_epsilon_sweep();
  ExperimentReport run_adversarial_training_curve();
  // `methods` defaults to every defense; kNone is always included.
  ExperimentReport run_defense_comparison(std::vector<DefenseMethod> methods = {});

  // Baseline classifier and its clean-test metrics for one seed.
  const ModelCheckpoint& baseline(std::uint64_t seed);
  Metrics clean_test_metrics(std::uint64_t seed);
  // Median perceptibility SNR of the attacked test set.
  double median_snr(std::uint64_t seed, NoiseKind kind, double epsilon);
  // Most recent GAN training result for a seed, if trained.
  const GanTrainResult* gan_result(std::uint64_t seed) const;

 private:
  struct SeedState;
  SeedState& state(std::uint64_t seed);
  const NoiseSource& source(SeedState& st, NoiseKind kind);
  const std::vector<LabeledSequence>& attacked_test(SeedState& st, NoiseKind kind, double epsilon);
  const std::vector<LabeledSequence>& train_pool(SeedState& st, NoiseKind kind);
  const ModelParams& advtrain_model(SeedState& st, NoiseKind kind, double fraction);
  const ModelParams& randnoise_model(SeedState& st);
  const GanTrainResult& gan(SeedState& st);
  nlohmann::json metadata(const std::string& experiment, const std::string& started) const;

  ExperimentConfig config_;
  std::map<std::uint64_t, std::unique_ptr<SeedState>> states_;
};

ExperimentReport run_epsilon_sweep(const ExperimentConfig& config);
ExperimentReport run_adversarial_training_curve(const ExperimentConfig& config);
ExperimentReport run_defense_comparison(const ExperimentConfig& config);

enum class ReportFormat { kCsv, kSvg };

inline const std::vector<std::string> kReportColumns{
    "dataset_tag", "noise_kind", "epsilon", "defense", "mix_fraction",
    "seed",        "error_rate", "ua",      "attack_success_rate"};

std::string report_csv(const ExperimentReport& report);
std::vector<ExperimentRow> parse_report_csv(const std::string& text);

// Mean and population std over seeds, one row per remaining key.
std::string summary_csv(const ExperimentReport& report);

// Self-contained chart of the seed means: error vs epsilon (sweep), error vs
// mix fraction (adversarial training), or grouped bars (defense comparison).
std::string report_svg(const ExperimentReport& report);

// Writes <experiment>.csv and <experiment>_summary.csv, or <experiment>.svg,
// into `dir`; returns the written paths.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, ReportFormat format,
                                               const std::filesystem::path& dir);
// <experiment>_metadata.json, kept apart so the CSV stays byte-reproducible.
std::filesystem::path write_report_metadata(const ExperimentReport& report, const std::filesystem::path& dir);

ExperimentReport read_report(const std::filesystem::path& csv);

}  // namespace serforge

#endif  // SERFORGE_EXPERIMENT_HPP_
