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

// Acceptance run: one PASS/FAIL line per criterion, exit status = number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "serforge/attack.hpp"
#include "serforge/classifier.hpp"
#include "serforge/corpus.hpp"
#include "serforge/defenses.hpp"
#include "serforge/experiment.hpp"
#include "serforge/noise_estimation.hpp"
#include "test_util.hpp"

using namespace serforge;
namespace st = serforge::testing;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  int failures = 0;
  void report(int n, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// Average ranks, ties sharing the mean rank.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = st::sample_mean(rx), my = st::sample_mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  // A flat error curve is not increasing.
  return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

void criterion_dsp(Outcome& out) {
  const auto t0 = Clock::now();
  double worst_db = -1e300, worst_parseval = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Waveform w = st::random_waveform(8000 + 997 * seed, seed, 0.8);
    for (int len : {256, 512, 1024}) {
      const FrameConfig fc{len, len / 2, WindowKind::kHann};
      const Waveform back = istft(stft(w, fc));
      double err = 0.0, ref = 0.0;
      for (std::size_t i = len; i + len < w.size(); ++i) {
        err += (back.samples[i] - w.samples[i]) * (back.samples[i] - w.samples[i]);
        ref += w.samples[i] * w.samples[i];
      }
      worst_db = std::max(worst_db, err > 0.0 ? 10.0 * std::log10(err / ref) : -400.0);

      const FrameConfig rect{len, len, WindowKind::kRectangular};
      const auto spec = stft(w, rect);
      for (int t = 0; t + 1 < spec.num_frames; ++t) {
        double e_time = 0.0;
        for (int i = 0; i < len; ++i) e_time += w.samples[t * len + i] * w.samples[t * len + i];
        double e_freq = std::norm(spec.at(t, 0)) + std::norm(spec.at(t, spec.num_bins - 1));
        for (int k = 1; k + 1 < spec.num_bins; ++k) e_freq += 2.0 * std::norm(spec.at(t, k));
        worst_parseval = std::max(worst_parseval, std::abs(e_freq - len * e_time) / (len * e_time));
      }
    }
  }
  const double secs = seconds_since(t0);
  out.report(1, worst_db <= -60.0 && worst_parseval <= 1e-6 && secs < 5.0,
             fmt("round trip worst %.1f dB (<= -60)", worst_db) + fmt(", Parseval worst %.2e (<= 1e-6)", worst_parseval) +
                 fmt(", %.2f s (< 5)", secs));
}

void criterion_matching(Outcome& out) {
  Rng rng(20240);
  double worst_mean = 0.0, worst_var = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 32 + rng.below(32000);
    Waveform seg = st::white_noise(n, rng.uniform(0.001, 0.5), 500000 + trial);
    const double offset = rng.uniform(-0.1, 0.1);
    for (auto& s : seg.samples) s += offset;
    NoiseProfile p;
    p.time_mean = rng.uniform(-0.01, 0.01);
    p.time_variance = std::pow(10.0, rng.uniform(-8.0, -2.0));
    const Waveform d = match_noise_statistics(seg, p);
    worst_mean = std::max(worst_mean, std::abs(st::sample_mean(d.samples) - p.time_mean));
    worst_var = std::max(worst_var, std::abs(st::population_variance(d.samples) - p.time_variance) / p.time_variance);
  }
  out.report(2, worst_mean <= 1e-9 && worst_var <= 1e-9,
             fmt("1000 pairs, mean error %.2e (<= 1e-9 abs)", worst_mean) + fmt(", variance error %.2e (<= 1e-9 rel)", worst_var));
}

void criterion_gradients(Outcome& out) {
  const auto t0 = Clock::now();
  Rng rng(31);
  int failures = 0, checked = 0;
  double worst = 0.0;
  auto tally = [&](const st::GradientCheck& r) {
    failures += r.failures;
    checked += r.checked;
    worst = std::max(worst, r.worst_relative);
  };

  const ModelParams model = init_model(4, 5, 5, 32);
  std::vector<LabeledSequence> batch;
  for (int len : {3, 1, 5}) batch.push_back({st::random_sequence(len, 4, rng), len == 1 ? Valence::kNegative : Valence::kPositive});
  tally(st::check_gradients<ModelParams>(model, loss_and_gradients(model, batch).gradients,
                                         [&](const ModelParams& q) { return loss_and_gradients(q, batch).loss; }));

  GanArchitecture arch;
  arch.input_dim = 4;
  arch.encoder_hidden = 5;
  arch.bottleneck = 3;
  arch.decoder_hidden = 5;
  const GanParams gan = init_gan(arch, 33);
  std::vector<SequencePair> pairs;
  for (int len : {4, 2, 3}) {
    FeatureSequence clean = st::random_sequence(len, 4, rng);
    FeatureSequence noisy = clean;
    noisy.frames += 0.3 * st::random_sequence(len, 4, rng).frames;
    pairs.push_back({noisy, clean});
  }
  std::vector<const SequencePair*> pb;
  for (const auto& p : pairs) pb.push_back(&p);
  for (double lambda : {0.0, 10.0}) {
    tally(st::check_gradients<Generator>(
        gan.generator, generator_loss(gan.generator, gan.discriminator, pb, lambda).gradients,
        [&](const Generator& g) { return generator_loss(g, gan.discriminator, pb, lambda).total; }));
  }
  tally(st::check_gradients<Generator>(gan.generator, reconstruction_loss(gan.generator, pb).gradients,
                                       [&](const Generator& g) { return reconstruction_loss(g, pb).total; }));
  tally(st::check_gradients<Discriminator>(
      gan.discriminator, discriminator_loss(gan.discriminator, gan.generator, pb).gradients,
      [&](const Discriminator& d) { return discriminator_loss(d, gan.generator, pb).total; }));
  const double secs = seconds_since(t0);
  out.report(3, failures == 0 && secs < 120.0,
             std::to_string(checked) + " entries, " + std::to_string(failures) + " outside 1e-4 rel / 1e-7 abs" +
                 fmt(", worst rel %.2e", worst) + fmt(", %.1f s (< 120)", secs));
}

double f0_oracle_accuracy(const CorpusSplit& split) {
  std::vector<std::pair<double, bool>> scored;
  for (const auto& u : split.train) scored.emplace_back(st::oracle_mean_f0(u.waveform), u.label == Valence::kPositive);
  std::sort(scored.begin(), scored.end());
  double thr = 0.0;
  std::size_t best = 0;
  for (std::size_t i = 0; i + 1 < scored.size(); ++i) {
    const double t = 0.5 * (scored[i].first + scored[i + 1].first);
    std::size_t c = 0;
    for (const auto& [f0, pos] : scored) c += (f0 > t) == pos ? 1 : 0;
    if (c > best) {
      best = c;
      thr = t;
    }
  }
  int correct = 0;
  for (const auto& u : split.test) correct += (st::oracle_mean_f0(u.waveform) > thr) == (u.label == Valence::kPositive) ? 1 : 0;
  return 100.0 * correct / static_cast<double>(split.test.size());
}

// Configuration of the end-to-end criteria.
ExperimentConfig acceptance_config() {
  ExperimentConfig c;
  c.train.hidden1 = c.train.hidden2 = 32;
  c.mix_fractions = {0.0, 0.5, 1.0};
  c.gan.architecture.encoder_hidden = 24;
  c.gan.architecture.bottleneck = 12;
  c.gan.architecture.decoder_hidden = 24;
  c.gan.max_steps = 10000;
  c.seeds = {1, 2, 3};
  return c;
}

std::string kind_name(NoiseKind k) { return std::string(noise_kind_name(k)); }

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
  return static_cast<bool>(f);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void criterion_determinism(Outcome& out, const std::string& cli) {
  const auto dir = std::filesystem::temp_directory_path() / "serforge_acceptance_cli";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string cfg = (dir / "config.json").string();
  write_text(cfg, R"({"corpus": {"num_speakers": 3, "utterances_per_speaker": 10, "duration_s": 1.0},
 "train": {"hidden1": 8, "hidden2": 8, "max_epochs": 6},
 "epsilons": [0, 1, 2], "mix_fractions": [0, 0.5, 1], "seeds": [1, 2],
 "gan": {"encoder_hidden": 8, "bottleneck": 4, "decoder_hidden": 8, "max_steps": 40,
         "pretrain_epochs": 2, "checkpoint_every": 10}})");
  const std::vector<std::string> commands{"attack-eval", "defend --method all"};
  const std::vector<std::string> files{"epsilon_sweep.csv", "epsilon_sweep_summary.csv", "adversarial_training.csv",
                                       "adversarial_training_summary.csv", "defense_comparison.csv",
                                       "defense_comparison_summary.csv"};
  bool ok = true;
  std::vector<std::string> runs[2];
  for (int r = 0; r < 2; ++r) {
    const std::string outdir = (dir / ("run" + std::to_string(r))).string();
    for (const auto& c : commands) {
      const std::string cmd = "env -u SERFORGE_SEED \"" + cli + "\" " + c + " --config \"" + cfg + "\" --output-dir \"" +
                              outdir + "\" > /dev/null";
      ok = ok && std::system(cmd.c_str()) == 0;
    }
    for (const auto& f : files) runs[r].push_back(read_text(outdir + "/" + f));
  }
  int identical = 0;
  for (std::size_t i = 0; i < files.size(); ++i) identical += !runs[0][i].empty() && runs[0][i] == runs[1][i] ? 1 : 0;
  ok = ok && identical == static_cast<int>(files.size());
  out.report(10, ok, std::to_string(identical) + "/" + std::to_string(files.size()) +
                         " report CSVs byte-identical across two CLI runs");
  std::filesystem::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "serforge";
  Outcome out;
  criterion_dsp(out);
  criterion_matching(out);
  criterion_gradients(out);

  const ExperimentConfig config = acceptance_config();
  ExperimentSession session(config);

  {
    const auto t0 = Clock::now();
    double ua_sum = 0.0, oracle_min = 100.0;
    std::string per_seed;
    for (auto seed : config.seeds) {
      CorpusSpec spec = config.corpus;
      spec.seed = seed;
      oracle_min = std::min(oracle_min, f0_oracle_accuracy(split_speaker_independent(
                                            generate_synthetic_corpus(spec), config.test_fraction, seed)));
      const double ua = session.clean_test_metrics(seed).unweighted_accuracy;
      ua_sum += ua;
      per_seed += fmt(" %.1f", ua);
    }
    const double ua = ua_sum / static_cast<double>(config.seeds.size());
    const double secs = seconds_since(t0);
    out.report(4, ua >= 90.0 && oracle_min >= 95.0 && secs < 900.0,
               fmt("test UA mean %.2f (>= 90), seeds", ua) + per_seed + fmt(", F0 oracle min %.1f (>= 95)", oracle_min) +
                   fmt(", %.0f s (< 900)", secs));
  }

  const auto sweep = session.run_epsilon_sweep();
  {
    bool pass = true;
    std::string detail;
    for (auto kind : config.noise_kinds) {
      std::vector<double> means;
      for (double e : config.epsilons) means.push_back(*mean_error(sweep, kind_name(kind), e, "none", 0.0));
      const double rise = means.back() - means.front();
      const double rho = spearman(config.epsilons, means);
      pass = pass && rise >= 10.0 && rho >= 0.8;
      detail += kind_name(kind) + fmt(" rise %.1f", rise) + fmt(" rho %.2f; ", rho);
    }
    out.report(5, pass, detail + "(rise >= 10, rho >= 0.8)");
  }

  {
    double worst = 1e300;
    std::string detail;
    for (auto seed : config.seeds) {
      for (auto kind : config.noise_kinds) {
        const double snr = session.median_snr(seed, kind, 2.0);
        worst = std::min(worst, snr);
      }
      detail += fmt(" %.2f", session.median_snr(seed, config.noise_kinds.front(), 2.0));
    }
    out.report(6, worst >= 10.0, fmt("lowest median SNR at eps 2 over seeds and kinds %.2f dB (>= 10); per seed", worst) + detail);
  }

  const auto curve = session.run_adversarial_training_curve();
  {
    bool pass = true;
    std::string detail;
    for (auto kind : config.noise_kinds) {
      const double e0 = *mean_error(curve, kind_name(kind), config.attack_epsilon, "advtrain", 0.0);
      const double e1 = *mean_error(curve, kind_name(kind), config.attack_epsilon, "advtrain", 1.0);
      pass = pass && e1 <= e0 - 10.0;
      detail += kind_name(kind) + fmt(" %.2f", e0) + fmt(" -> %.2f; ", e1);
    }
    out.report(7, pass, detail + "(drop >= 10)");
  }

  const auto t_cmp = Clock::now();
  const auto cmp = session.run_defense_comparison();
  const double cmp_secs = seconds_since(t_cmp);
  const double frac = config.comparison_mix_fraction;
  {
    bool pass = true;
    std::string detail;
    for (auto kind : config.noise_kinds) {
      const double none = *mean_error(cmp, kind_name(kind), config.attack_epsilon, "none", 0.0);
      const double rn = *mean_error(cmp, kind_name(kind), config.attack_epsilon, "randnoise", 0.0);
      const double adv = *mean_error(cmp, kind_name(kind), config.attack_epsilon, "advtrain", frac);
      pass = pass && rn <= none && (none - rn) < (none - adv);
      detail += kind_name(kind) + fmt(" none %.2f", none) + fmt(" randnoise %.2f", rn) + fmt(" advtrain %.2f; ", adv);
    }
    out.report(8, pass, detail + "(randnoise <= none, gain below advtrain's)");
  }
  {
    bool pass = cmp_secs < 1800.0;
    std::string detail;
    for (auto kind : config.noise_kinds) {
      const double none = *mean_error(cmp, kind_name(kind), config.attack_epsilon, "none", 0.0);
      const double gan = *mean_error(cmp, kind_name(kind), config.attack_epsilon, "gan", 0.0);
      pass = pass && gan <= none - 10.0;
      detail += kind_name(kind) + fmt(" %.2f", none) + fmt(" -> %.2f; ", gan);
    }
    bool finite = true;
    long steps = 0;
    for (auto seed : config.seeds) {
      const auto* g = session.gan_result(seed);
      finite = finite && g != nullptr && g->g_updates == config.gan.max_steps;
      if (!g) continue;
      steps = std::min<long>(steps ? steps : g->g_updates, g->g_updates);
      for (const auto& rec : g->history) {
        finite = finite && std::isfinite(rec.d_loss) && std::isfinite(rec.g_adv_loss) && std::isfinite(rec.g_mse);
      }
    }
    pass = pass && finite;
    out.report(9, pass, detail + "(drop >= 10); " + std::to_string(steps) + " steps per seed, losses " +
                            (finite ? "finite" : "NOT finite") + fmt(", comparison %.0f s (< 1800)", cmp_secs));
  }

  criterion_determinism(out, cli);

  std::printf("%d of 10 criteria failed\n", out.failures);
  return out.failures;
}
