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

#ifndef SERFORGE_DEFENSES_HPP_
#define SERFORGE_DEFENSES_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "serforge/attack.hpp"
#include "serforge/corpus.hpp"
#include "serforge/features.hpp"
#include "serforge/nn.hpp"

namespace serforge {

// ---- data-level defenses --------------------------------------------------

// Attacks every utterance with its own noise segment. Items keep their id
// stem, label and speaker; an adversarial step is appended to the provenance.
std::vector<LabeledUtterance> attack_dataset(std::span<const LabeledUtterance> clean,
                                             const NoiseSource& source, double epsilon,
                                             std::uint64_t seed, const FrameConfig& analysis = {});

struct MixSpec {
  double fraction = 0.0;  // adversarial share, in [0, 1]
};

void validate(const MixSpec& spec);

// clean_train followed by floor(fraction * |clean_train|) items drawn without
// replacement from adv_pool.
std::vector<LabeledUtterance> mix_adversarial(std::span<const LabeledUtterance> clean_train,
                                              std::span<const LabeledUtterance> adv_pool,
                                              const MixSpec& spec, std::uint64_t seed);

// Adds N(0, noise_std^2) to every waveform, then clips. The per-utterance
// stream depends on the seed and the utterance id only.
std::vector<LabeledUtterance> augment_random_noise(std::span<const LabeledUtterance> train,
                                                   double noise_std, std::uint64_t seed);

// ---- GAN denoiser ---------------------------------------------------------

// encoder LSTM -> per-frame linear bottleneck -> decoder LSTM
struct EncoderDecoder {
  nn::LstmParams encoder;
  nn::Matrix bottleneck_w;  // B x He
  nn::Matrix bottleneck_b;  // B x 1
  nn::LstmParams decoder;

  template <typename F>
  void for_each(const std::string& prefix, F&& f) {
    encoder.for_each(prefix + "encoder", f);
    f(prefix + "bottleneck.w", bottleneck_w);
    f(prefix + "bottleneck.b", bottleneck_b);
    decoder.for_each(prefix + "decoder", f);
  }
  template <typename F>
  void for_each(const std::string& prefix, F&& f) const {
    encoder.for_each(prefix + "encoder", f);
    f(prefix + "bottleneck.w", bottleneck_w);
    f(prefix + "bottleneck.b", bottleneck_b);
    decoder.for_each(prefix + "decoder", f);
  }
};

// Maps a feature sequence to one of the same shape through a per-frame
// linear read-out of the decoder states.
struct Generator {
  EncoderDecoder body;
  nn::Matrix out_w;  // D x Hd
  nn::Matrix out_b;  // D x 1

  int input_dim() const { return body.encoder.input_dim(); }

  template <typename F>
  void for_each(const std::string& prefix, F&& f) {
    body.for_each(prefix, f);
    f(prefix + "out.w", out_w);
    f(prefix + "out.b", out_b);
  }
  template <typename F>
  void for_each(const std::string& prefix, F&& f) const {
    body.for_each(prefix, f);
    f(prefix + "out.w", out_w);
    f(prefix + "out.b", out_b);
  }
};

// Same trunk as the generator; a sigmoid unit reads the time average of the
// decoder states over the valid frames.
struct Discriminator {
  EncoderDecoder body;
  nn::Matrix head_w;  // 1 x Hd
  nn::Matrix head_b;  // 1 x 1

  int input_dim() const { return body.encoder.input_dim(); }

  template <typename F>
  void for_each(const std::string& prefix, F&& f) {
    body.for_each(prefix, f);
    f(prefix + "head.w", head_w);
    f(prefix + "head.b", head_b);
  }
  template <typename F>
  void for_each(const std::string& prefix, F&& f) const {
    body.for_each(prefix, f);
    f(prefix + "head.w", head_w);
    f(prefix + "head.b", head_b);
  }
};

struct GanParams {
  Generator generator;
  Discriminator discriminator;

  template <typename F>
  void for_each(const std::string& prefix, F&& f) {
    generator.for_each(prefix + "g.", f);
    discriminator.for_each(prefix + "d.", f);
  }
  template <typename F>
  void for_each(const std::string& prefix, F&& f) const {
    generator.for_each(prefix + "g.", f);
    discriminator.for_each(prefix + "d.", f);
  }
};

struct GanArchitecture {
  int input_dim = kNumDescriptors;
  int encoder_hidden = 64;
  int bottleneck = 32;
  int decoder_hidden = 64;
};

void validate(const GanArchitecture& arch);

Generator init_generator(const GanArchitecture& arch, std::uint64_t seed);
Discriminator init_discriminator(const GanArchitecture& arch, std::uint64_t seed);
GanParams init_gan(const GanArchitecture& arch, std::uint64_t seed);

struct GanTrainConfig {
  GanArchitecture architecture{};
  double learning_rate = 1e-4;
  // Autoencoder pre-training rate; pre-training uses the same optimiser kind.
  double pretrain_learning_rate = 1e-3;
  int batch_size = 32;
  int d_steps_per_g_step = 2;
  int pretrain_epochs = 20;
  // Generator updates; each is preceded by d_steps_per_g_step discriminator
  // updates.
  int max_steps = 2000;
  double lambda_mse = 10.0;
  // Global gradient-norm cap per update; 0 disables.
  double clip_norm = 0.0;
  // Pair-set MSE is measured every this many steps; the generator with the
  // lowest value is kept.
  int checkpoint_every = 100;
  std::uint64_t seed = 0;
};

void validate(const GanTrainConfig& config);

struct SequencePair {
  FeatureSequence noisy;
  FeatureSequence clean;
};

struct GanStepRecord {
  int step = 0;
  double d_loss = 0.0;       // mean over the step's discriminator updates
  double g_adv_loss = 0.0;   // mean log(1 - D(G(noisy)))
  double g_mse = 0.0;        // batch MSE(G(noisy), clean)
  double d_real = 0.0;       // mean D(clean)
  double d_fake = 0.0;       // mean D(G(noisy))
};

struct GanTrainResult {
  GanParams params;
  std::vector<GanStepRecord> history;
  std::vector<double> pretrain_mse;  // per-epoch mean batch loss
  std::int64_t d_updates = 0;
  std::int64_t g_updates = 0;
  int best_step = 0;  // 0 = the pre-trained generator
  double best_mse = 0.0;
};

// Mean squared error over valid frames and descriptors.
double sequence_mse(const FeatureSequence& a, const FeatureSequence& b);
// Mean squared error of G over a pair set.
double generator_mse(const Generator& g, std::span<const SequencePair> pairs);

FeatureSequence gan_clean(const Generator& g, const FeatureSequence& seq);
std::vector<FeatureSequence> gan_clean(const Generator& g, std::span<const FeatureSequence> seqs);

// Loss and exact gradient pieces, exposed for verification.
struct GeneratorLoss {
  double total = 0.0;
  double adversarial = 0.0;
  double mse = 0.0;
  Generator gradients;
};
struct DiscriminatorLoss {
  double total = 0.0;
  double real_prob = 0.0;
  double fake_prob = 0.0;
  Discriminator gradients;
};

// Reconstruction MSE(G(input), target) over the batch.
GeneratorLoss reconstruction_loss(const Generator& g, std::span<const SequencePair* const> batch);
// -[log D(clean) + log(1 - D(G(noisy)))], G held fixed.
DiscriminatorLoss discriminator_loss(const Discriminator& d, const Generator& g,
                                     std::span<const SequencePair* const> batch);
// log(1 - D(G(noisy))) + lambda * MSE(G(noisy), clean), D held fixed.
GeneratorLoss generator_loss(const Generator& g, const Discriminator& d,
                             std::span<const SequencePair* const> batch, double lambda_mse);
// D(seq) per item.
std::vector<double> discriminate(const Discriminator& d, std::span<const FeatureSequence* const> seqs);

// Plain autoencoder training on clean sequences.
Generator gan_pretrain(const Generator& g, std::span<const FeatureSequence> clean,
                       const GanTrainConfig& config, std::vector<double>* epoch_mse = nullptr);

// Pre-trains G, then alternates discriminator and generator updates.
GanTrainResult gan_train(std::span<const SequencePair> pairs, const GanTrainConfig& config);

void save_gan(const GanParams& params, const GanArchitecture& arch, const std::filesystem::path& path);
GanParams load_gan(const std::filesystem::path& path, GanArchitecture* arch = nullptr);

}  // namespace serforge

#endif  // SERFORGE_DEFENSES_HPP_
