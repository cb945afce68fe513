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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "serforge/attack.hpp"
#include "serforge/audio.hpp"
#include "serforge/classifier.hpp"
#include "serforge/corpus.hpp"
#include "serforge/error.hpp"
#include "serforge/experiment.hpp"
#include "serforge/features.hpp"
#include "serforge/json_io.hpp"
#include "serforge/noise_estimation.hpp"

namespace fs = std::filesystem;
using namespace serforge;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// Options shared by the experiment subcommands.
struct ExperimentFlags {
  std::string config;
  std::string output_dir;
  std::vector<std::uint64_t> seeds;
  std::vector<double> epsilons;
  std::vector<std::string> noise_kinds;
  std::vector<double> mix_fractions;
  std::optional<int> gan_steps;
  std::optional<double> random_noise_std;
};

void add_experiment_flags(CLI::App* app, ExperimentFlags& f) {
  app->add_option("--config", f.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--output-dir", f.output_dir, "report directory");
  app->add_option("--seeds", f.seeds, "experiment seeds");
  app->add_option("--epsilons", f.epsilons, "perturbation factors");
  app->add_option("--noise-kinds", f.noise_kinds, "cafe, meeting, station");
  app->add_option("--mix-fractions", f.mix_fractions, "adversarial shares for the training curve");
  app->add_option("--gan-steps", f.gan_steps, "generator updates");
  app->add_option("--random-noise-std", f.random_noise_std, "augmentation noise std");
}

NoiseKind noise_kind_or_throw(const std::string& name) {
  const auto kind = parse_noise_kind(name);
  if (!kind || *kind == NoiseKind::kUserSupplied) {
    throw Error(ErrorCode::kConfigError, "unknown noise kind '" + name + "'");
  }
  return *kind;
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("SERFORGE_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != std::string(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfigError, std::string("SERFORGE_SEED is not an integer: ") + s);
  }
}

ExperimentConfig build_config(const ExperimentFlags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_experiment_config(f.config);
  if (!f.output_dir.empty()) c.output_dir = f.output_dir;
  if (!f.seeds.empty()) c.seeds = f.seeds;
  if (!f.epsilons.empty()) c.epsilons = f.epsilons;
  if (!f.noise_kinds.empty()) {
    c.noise_kinds.clear();
    for (const auto& k : f.noise_kinds) c.noise_kinds.push_back(noise_kind_or_throw(k));
  }
  if (!f.mix_fractions.empty()) c.mix_fractions = f.mix_fractions;
  if (f.gan_steps) c.gan.max_steps = *f.gan_steps;
  if (f.random_noise_std) c.random_noise_std = *f.random_noise_std;
  if (const auto s = env_seed()) c.seeds = {*s};
  validate(c);
  return c;
}

void emit_all(const ExperimentReport& report, const fs::path& dir) {
  std::vector<fs::path> written = emit_report(report, ReportFormat::kCsv, dir);
  for (const auto& p : emit_report(report, ReportFormat::kSvg, dir)) written.push_back(p);
  written.push_back(write_report_metadata(report, dir));
  for (const auto& p : written) std::cout << p.string() << "\n";
}

NoiseSource noise_from_flag(const std::string& noise, double duration_s, std::uint64_t seed, int rate) {
  if (const auto kind = parse_noise_kind(noise); kind && *kind != NoiseKind::kUserSupplied) {
    return generate_noise_source(*kind, duration_s, seed, rate);
  }
  if (!fs::exists(noise)) {
    throw Error(ErrorCode::kConfigError, "--noise is neither a noise kind nor a file: " + noise);
  }
  return NoiseSource{load_wav(noise), NoiseKind::kUserSupplied};
}

// Bad framing flags are configuration errors, not data errors.
void check_frames(const FrameConfig& fc) {
  try {
    validate(fc);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
}

void add_frame_flags(CLI::App* app, FrameConfig& fc, std::string& window) {
  app->add_option("--frame-length", fc.frame_length, "samples per frame");
  app->add_option("--hop-length", fc.hop_length, "samples between frames");
  app->add_option("--window", window, "hann, hamming or rectangular");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-imputation adversarial attacks and defenses for speech emotion recognition"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // estimate-noise
  std::string en_input, en_output, en_window = "hann";
  FrameConfig en_frames;
  auto* en = app.add_subcommand("estimate-noise", "background noise profile of a WAV file");
  en->add_option("--input", en_input, "mono PCM WAV")->required();
  en->add_option("--output", en_output, "JSON file; stdout when omitted");
  add_frame_flags(en, en_frames, en_window);

  // craft
  std::string cr_input, cr_output, cr_noise;
  double cr_epsilon = 1.0, cr_noise_duration = 30.0;
  std::uint64_t cr_seed = 0;
  auto* cr = app.add_subcommand("craft", "add statistics-matched noise to a WAV file");
  cr->add_option("--input", cr_input, "mono PCM WAV")->required();
  cr->add_option("--noise", cr_noise, "cafe, meeting, station or a WAV file")->required();
  cr->add_option("--epsilon", cr_epsilon, "perturbation factor")->check(CLI::NonNegativeNumber);
  cr->add_option("--seed", cr_seed, "segment seed");
  cr->add_option("--noise-duration", cr_noise_duration, "seconds of synthetic noise");
  cr->add_option("--output", cr_output, "adversarial WAV")->required();

  // extract-features
  std::string ef_input, ef_output, ef_window = "hann";
  FrameConfig ef_frames{1024, 512, WindowKind::kHann};
  auto* ef = app.add_subcommand("extract-features", "frame-level descriptors of a WAV file as CSV");
  ef->add_option("--input", ef_input, "mono PCM WAV")->required();
  ef->add_option("--output", ef_output, "CSV file; stdout when omitted");
  add_frame_flags(ef, ef_frames, ef_window);

  // train
  ExperimentFlags tr_flags;
  std::string tr_output;
  auto* tr = app.add_subcommand("train", "train the baseline classifier on the configured corpus");
  add_experiment_flags(tr, tr_flags);
  tr->add_option("--output", tr_output, "model checkpoint; defaults to <output-dir>/model_seed<N>.json");

  // attack-eval
  ExperimentFlags ae_flags;
  auto* ae = app.add_subcommand("attack-eval", "epsilon sweep of the attack against the baseline");
  add_experiment_flags(ae, ae_flags);

  // defend
  ExperimentFlags de_flags;
  std::string de_method = "all";
  auto* de = app.add_subcommand("defend", "evaluate defenses under the attack");
  add_experiment_flags(de, de_flags);
  de->add_option("--method", de_method, "advtrain, randnoise, gan or all")
      ->check(CLI::IsMember({"advtrain", "randnoise", "gan", "all"}));

  // report
  std::string rp_input, rp_output_dir;
  auto* rp = app.add_subcommand("report", "re-render summary and chart from a report CSV");
  rp->add_option("--input", rp_input, "report CSV")->required()->check(CLI::ExistingFile);
  rp->add_option("--output-dir", rp_output_dir, "defaults to the CSV's directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*en) {
      en_frames.window = parse_window(en_window);
      check_frames(en_frames);
      const auto profile = estimate_noise_profile(load_wav(en_input), en_frames);
      const nlohmann::json j = {{"time_mean", profile.time_mean},
                                {"time_variance", profile.time_variance},
                                {"spectral_floor", profile.spectral_floor},
                                {"frame_config", to_json(profile.frame_config)}};
      if (en_output.empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        write_json_file(j, en_output);
      }
    } else if (*cr) {
      const Waveform x = load_wav(cr_input);
      const NoiseSource source = noise_from_flag(cr_noise, cr_noise_duration, cr_seed, x.sample_rate);
      AttackConfig ac;
      ac.epsilon = cr_epsilon;
      ac.noise_kind = source.kind;
      ac.seed = cr_seed;
      const Waveform adv = craft_adversarial(x, source, ac);
      save_wav(adv, cr_output);
      std::cout << "snr_db " << perceptibility_snr(x, adv) << "\n";
    } else if (*ef) {
      ef_frames.window = parse_window(ef_window);
      check_frames(ef_frames);
      const auto seq = extract_lld(load_wav(ef_input), ef_frames);
      if (ef_output.empty()) {
        write_feature_csv(seq, std::cout);
      } else {
        write_feature_csv(seq, fs::path(ef_output));
      }
    } else if (*tr) {
      const auto config = build_config(tr_flags);
      ExperimentSession session(config);
      fs::create_directories(config.output_dir);
      for (const auto seed : config.seeds) {
        const auto& model = session.baseline(seed);
        const auto m = session.clean_test_metrics(seed);
        fs::path out = tr_output.empty() || config.seeds.size() > 1
                           ? config.output_dir / ("model_seed" + std::to_string(seed) + ".json")
                           : fs::path(tr_output);
        save_model(model, out);
        std::cout << "seed " << seed << " test_ua " << m.unweighted_accuracy << " -> " << out.string() << "\n";
      }
    } else if (*ae) {
      const auto config = build_config(ae_flags);
      ExperimentSession session(config);
      emit_all(session.run_epsilon_sweep(), config.output_dir);
    } else if (*de) {
      const auto config = build_config(de_flags);
      ExperimentSession session(config);
      if (de_method == "advtrain" || de_method == "all") {
        emit_all(session.run_adversarial_training_curve(), config.output_dir);
      }
      std::vector<DefenseMethod> methods;
      if (de_method == "all") {
        methods = {DefenseMethod::kRandomNoise, DefenseMethod::kAdversarialTraining, DefenseMethod::kGan};
      } else {
        methods = {parse_defense(de_method)};
      }
      emit_all(session.run_defense_comparison(methods), config.output_dir);
      for (const auto seed : config.seeds) {
        if (const auto* g = session.gan_result(seed)) {
          const fs::path out = config.output_dir / ("gan_seed" + std::to_string(seed) + ".json");
          save_gan(g->params, config.gan.architecture, out);
          std::cout << out.string() << "\n";
        }
      }
    } else if (*rp) {
      const auto report = read_report(rp_input);
      const fs::path dir = rp_output_dir.empty() ? fs::path(rp_input).parent_path() : fs::path(rp_output_dir);
      const auto written = emit_report(report, ReportFormat::kSvg, dir);
      for (const auto& p : written) std::cout << p.string() << "\n";
      std::cout << summary_csv(report);
    }
  } catch (const Error& e) {
    std::cerr << "serforge: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfigError ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "serforge: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
