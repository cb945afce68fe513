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
#include <fstream>
#include <regex>
#include <sstream>

#include "serforge/error.hpp"
#include "serforge/experiment.hpp"
#include "test_util.hpp"

using namespace serforge;
namespace st = serforge::testing;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.corpus.num_speakers = 3;
  c.corpus.utterances_per_speaker = 8;
  c.corpus.duration_s = 1.0;
  c.train.hidden1 = c.train.hidden2 = 6;
  c.train.max_epochs = 4;
  c.epsilons = {0.0, 1.0, 2.0};
  c.mix_fractions = {0.0, 0.5, 1.0};
  c.seeds = {1, 2};
  c.gan.architecture.encoder_hidden = c.gan.architecture.decoder_hidden = 6;
  c.gan.architecture.bottleneck = 4;
  c.gan.max_steps = 6;
  c.gan.pretrain_epochs = 1;
  c.gan.checkpoint_every = 3;
  return c;
}

// Tag-balance check: every element closes in order, attributes are quoted.
bool well_formed_xml(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while ((pos = text.find('<', pos)) != std::string::npos) {
    const std::size_t end = text.find('>', pos);
    if (end == std::string::npos) return false;
    const std::string tag = text.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else if (tag.back() != '/') {
      stack.push_back(tag.substr(0, tag.find_first_of(" \n")));
    }
  }
  return stack.empty();
}

std::vector<std::string> value_labels(const std::string& svg) {
  static const std::regex re("<text class=\"value\"[^>]*>([^<]*)</text>");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> summary_error_means(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> out;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    out.push_back(cells.at(6));
  }
  std::sort(out.begin(), out.end());
  return out;
}

ExperimentReport synthetic_report(const std::string& experiment) {
  ExperimentReport r;
  r.experiment = experiment;
  Rng rng(3);
  for (const char* kind : {"cafe", "meeting", "station"}) {
    for (double eps : {0.0, 0.5, 2.0}) {
      for (std::uint64_t seed : {1, 2, 3}) {
        ExperimentRow row;
        row.dataset_tag = "synthetic";
        row.noise_kind = kind;
        row.epsilon = eps;
        row.defense = "none";
        row.seed = seed;
        row.error_rate = rng.uniform(0.0, 60.0);
        row.ua = 100.0 - row.error_rate;
        row.attack_success_rate = rng.uniform(0.0, 100.0) / 3.0;
        r.rows.push_back(row);
      }
    }
  }
  return r;
}

}  // namespace

TEST_CASE("defense names") {
  for (auto m : {DefenseMethod::kNone, DefenseMethod::kAdversarialTraining, DefenseMethod::kRandomNoise,
                 DefenseMethod::kGan}) {
    CHECK(parse_defense(defense_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_defense("magic"), Error);
}

TEST_CASE("config JSON round trip and hash") {
  ExperimentConfig c = tiny_config();
  c.random_noise_std = 0.02;
  c.train.ties_by_loss = true;
  const auto back = experiment_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  ExperimentConfig moved = c;
  moved.output_dir = "elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  moved.epsilons.push_back(1.5);
  CHECK(config_hash(moved) != config_hash(c));

  // Missing keys keep their defaults.
  CHECK(to_json(experiment_config_from_json(nlohmann::json::object())) == to_json(ExperimentConfig{}));
}

TEST_CASE("config validation") {
  auto code_of = [](const nlohmann::json& j) {
    try {
      validate(experiment_config_from_json(j));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  CHECK(code_of({{"epsilons", nlohmann::json::array()}}) == ErrorCode::kConfigError);
  CHECK(code_of({{"epsilons", {0.0, -1.0}}}) == ErrorCode::kConfigError);
  CHECK(code_of({{"epsilons", "two"}}) == ErrorCode::kConfigError);
  CHECK(code_of({{"noise_kinds", {"airport"}}}) == ErrorCode::kConfigError);
  CHECK(code_of({{"seeds", nlohmann::json::array()}}) == ErrorCode::kConfigError);
  CHECK(code_of({{"mix_fractions", {1.5}}}) == ErrorCode::kConfigError);

  st::TempDir dir("cfg");
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_experiment_config(dir / "broken.json"), Error);
}

TEST_CASE("report CSV round trip") {
  const auto report = synthetic_report("epsilon_sweep");
  const auto text = report_csv(report);
  CHECK(text.substr(0, text.find('\n')) ==
        "dataset_tag,noise_kind,epsilon,defense,mix_fraction,seed,error_rate,ua,attack_success_rate");
  CHECK(parse_report_csv(text) == report.rows);
  CHECK_THROWS_AS(parse_report_csv("a,b\n1,2\n"), Error);
}

TEST_CASE("summary statistics") {
  ExperimentReport r;
  r.experiment = "epsilon_sweep";
  for (std::uint64_t seed : {1, 2}) {
    ExperimentRow row;
    row.dataset_tag = "synthetic";
    row.noise_kind = "cafe";
    row.defense = "none";
    row.seed = seed;
    row.error_rate = seed == 1 ? 10.0 : 30.0;
    row.ua = 100.0 - row.error_rate;
    r.rows.push_back(row);
  }
  const auto csv = summary_csv(r);
  CHECK(csv.find("synthetic,cafe,0,none,0,2,20,10,80,10,0,0") != std::string::npos);
  CHECK(mean_error(r, "cafe", 0.0, "none", 0.0) == 20.0);
  CHECK_FALSE(mean_error(r, "station", 0.0, "none", 0.0).has_value());
  CHECK(find_row(r, "cafe", 0.0, "none", 0.0, 2)->error_rate == 30.0);
  CHECK(find_row(r, "cafe", 0.0, "none", 0.0, 3) == nullptr);
}

TEST_CASE("SVG charts") {
  SUBCASE("line chart per noise kind") {
    const auto report = synthetic_report("epsilon_sweep");
    const auto svg = report_svg(report);
    CHECK(well_formed_xml(svg));
    for (const char* kind : {"cafe", "meeting", "station"}) {
      const std::string marker = std::string("<polyline data-series=\"") + kind + "\"";
      std::size_t n = 0;
      for (std::size_t p = svg.find(marker); p != std::string::npos; p = svg.find(marker, p + 1)) ++n;
      CHECK(n == 1);
    }
    CHECK(value_labels(svg) == summary_error_means(summary_csv(report)));
  }
  SUBCASE("grouped bars") {
    ExperimentReport report = synthetic_report("defense_comparison");
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
      report.rows[i].defense = i % 2 ? "gan" : "none";
      report.rows[i].epsilon = 2.0;
    }
    const auto svg = report_svg(report);
    CHECK(well_formed_xml(svg));
    CHECK(svg.find("data-defense=\"gan\"") != std::string::npos);
    CHECK(svg.find("http://") == svg.find("http://www.w3.org/2000/svg"));
    CHECK(value_labels(svg) == summary_error_means(summary_csv(report)));
  }
}

TEST_CASE("emit and read back") {
  st::TempDir dir("emit");
  const auto report = synthetic_report("epsilon_sweep");
  const auto csv_paths = emit_report(report, ReportFormat::kCsv, dir.path());
  const auto svg_paths = emit_report(report, ReportFormat::kSvg, dir.path());
  CHECK(csv_paths.size() == 2);
  CHECK(svg_paths.size() == 1);
  const auto back = read_report(dir / "epsilon_sweep.csv");
  CHECK(back.experiment == "epsilon_sweep");
  CHECK(back.rows == report.rows);
  CHECK_THROWS_AS(emit_report(ExperimentReport{"empty", {}, {}}, ReportFormat::kCsv, dir.path()), Error);
}

TEST_CASE("experiment pipeline on a tiny corpus") {
  const auto config = tiny_config();
  ExperimentSession session(config);
  const auto sweep = session.run_epsilon_sweep();
  CHECK(sweep.rows.size() == config.noise_kinds.size() * config.epsilons.size() * config.seeds.size());
  for (const auto& row : sweep.rows) {
    CHECK(row.error_rate == doctest::Approx(100.0 - row.ua).epsilon(1e-12));
    if (row.epsilon == 0.0) {
      // Same code path as the clean evaluation.
      CHECK(row.error_rate == session.clean_test_metrics(row.seed).error_rate);
      CHECK(row.attack_success_rate == 0.0);
    }
  }
  CHECK(sweep.metadata.at("config_hash") == config_hash(config));
  CHECK(sweep.metadata.at("version") == kVersion);

  const auto curve = session.run_adversarial_training_curve();
  for (const auto& row : curve.rows) {
    if (row.mix_fraction == 0.0) {
      const auto* plain = find_row(sweep, row.noise_kind, config.attack_epsilon, "none", 0.0, row.seed);
      REQUIRE(plain != nullptr);
      CHECK(row.error_rate == plain->error_rate);
    }
  }

  const auto cmp = session.run_defense_comparison();
  for (const char* d : {"none", "randnoise", "advtrain", "gan"}) {
    CHECK(std::count_if(cmp.rows.begin(), cmp.rows.end(), [&](const ExperimentRow& r) { return r.defense == d; }) ==
          static_cast<long>(config.noise_kinds.size() * config.seeds.size()));
  }
  for (const auto& row : cmp.rows) {
    if (row.defense == "none") {
      CHECK(row.error_rate == find_row(sweep, row.noise_kind, config.attack_epsilon, "none", 0.0, row.seed)->error_rate);
    }
  }
  REQUIRE(session.gan_result(1) != nullptr);
  CHECK(session.gan_result(1)->g_updates == config.gan.max_steps);

  // A second session reproduces the reports byte for byte.
  ExperimentSession again(config);
  CHECK(report_csv(again.run_epsilon_sweep()) == report_csv(sweep));
  CHECK(report_csv(again.run_defense_comparison()) == report_csv(cmp));
}
