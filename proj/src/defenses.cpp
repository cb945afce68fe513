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

#include "serforge/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "serforge/classifier.hpp"
#include "serforge/error.hpp"
#include "serforge/format.hpp"
#include "serforge/json_io.hpp"
#include "serforge/random.hpp"

namespace serforge {

using nn::Matrix;

std::vector<LabeledUtterance> attack_dataset(std::span<const LabeledUtterance> clean,
                                             const NoiseSource& source, double epsilon,
                                             std::uint64_t seed, const FrameConfig& analysis) {
  std::vector<LabeledUtterance> out;
  out.reserve(clean.size());
  const std::string tag = "adv-" + std::string(noise_kind_name(source.kind)) + "-" + format_double(epsilon);
  for (const auto& u : clean) {
    AttackConfig config;
    config.epsilon = epsilon;
    config.noise_kind = source.kind;
    config.seed = derive_seed(seed, {fnv1a64(u.id)});
    config.analysis = analysis;
    LabeledUtterance adv = u;
    adv.id = u.id + "/" + tag;
    adv.waveform = craft_adversarial(u.waveform, source, config);
    adv.provenance.push_back({ProvenanceKind::kAdversarial, source.kind, epsilon, 0.0});
    out.push_back(std::move(adv));
  }
  return out;
}

void validate(const MixSpec& spec) {
  if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mix fraction must lie in [0, 1]");
  }
}

std::vector<LabeledUtterance> mix_adversarial(std::span<const LabeledUtterance> clean_train,
                                              std::span<const LabeledUtterance> adv_pool,
                                              const MixSpec& spec, std::uint64_t seed) {
  validate(spec);
  const auto wanted = static_cast<std::size_t>(
      std::floor(spec.fraction * static_cast<double>(clean_train.size()) + 1e-9));
  if (wanted > adv_pool.size()) {
    throw Error(ErrorCode::kInsufficientAdversarialPool,
                "need " + std::to_string(wanted) + " adversarial items, pool has " +
                    std::to_string(adv_pool.size()));
  }
  std::vector<LabeledUtterance> out(clean_train.begin(), clean_train.end());
  std::vector<std::size_t> order(adv_pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  // Keep pool order among the chosen items so the result does not depend on
  // the permutation beyond membership.
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<long>(wanted));
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i : chosen) out.push_back(adv_pool[i]);
  return out;
}

std::vector<LabeledUtterance> augment_random_noise(std::span<const LabeledUtterance> train,
                                                   double noise_std, std::uint64_t seed) {
  if (!(noise_std >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_std must be >= 0");
  std::vector<LabeledUtterance> out(train.begin(), train.end());
  if (noise_std == 0.0) return out;
  for (auto& u : out) {
    Rng rng(derive_seed(seed, {fnv1a64(u.id)}));
    for (double& s : u.waveform.samples) s += noise_std * rng.normal();
    clip_in_place(u.waveform);
    u.provenance.push_back({ProvenanceKind::kAugmented, NoiseKind::kUserSupplied, 0.0, noise_std});
  }
  return out;
}

// ---- GAN ------------------------------------------------------------------

namespace {

struct TrunkPass {
  nn::LstmCache encoder;
  nn::SequenceBatch bottleneck;
  nn::LstmCache decoder;
};

TrunkPass trunk_forward(const EncoderDecoder& p, const nn::SequenceBatch& input) {
  TrunkPass tp;
  tp.encoder = nn::lstm_forward(p.encoder, input);
  std::vector<Matrix> z(input.num_steps());
  for (int t = 0; t < input.num_steps(); ++t) {
    z[t] = p.bottleneck_w * tp.encoder.hidden[t];
    z[t].colwise() += p.bottleneck_b.col(0);
  }
  tp.bottleneck = nn::as_batch(std::move(z), input.lengths);
  tp.decoder = nn::lstm_forward(p.decoder, tp.bottleneck);
  return tp;
}

// Returns the gradient w.r.t. the trunk input.
std::vector<Matrix> trunk_backward(const EncoderDecoder& p, const nn::SequenceBatch& input,
                                   const TrunkPass& tp, const std::vector<Matrix>& d_decoder_hidden,
                                   EncoderDecoder& grads) {
  const std::vector<Matrix> d_z =
      nn::lstm_backward(p.decoder, tp.bottleneck, tp.decoder, d_decoder_hidden, grads.decoder);
  std::vector<Matrix> d_encoder_hidden(d_z.size());
  for (std::size_t t = 0; t < d_z.size(); ++t) {
    grads.bottleneck_w.noalias() += d_z[t] * tp.encoder.hidden[t].transpose();
    grads.bottleneck_b.col(0) += d_z[t].rowwise().sum();
    d_encoder_hidden[t].noalias() = p.bottleneck_w.transpose() * d_z[t];
  }
  return nn::lstm_backward(p.encoder, input, tp.encoder, d_encoder_hidden, grads.encoder);
}

struct GeneratorPass {
  TrunkPass trunk;
  nn::SequenceBatch output;
};

GeneratorPass generator_forward(const Generator& g, const nn::SequenceBatch& input) {
  GeneratorPass gp;
  gp.trunk = trunk_forward(g.body, input);
  std::vector<Matrix> out(input.num_steps());
  for (int t = 0; t < input.num_steps(); ++t) {
    out[t] = g.out_w * gp.trunk.decoder.hidden[t];
    out[t].colwise() += g.out_b.col(0);
  }
  gp.output = nn::as_batch(std::move(out), input.lengths);
  return gp;
}

void generator_backward(const Generator& g, const nn::SequenceBatch& input, const GeneratorPass& gp,
                        const std::vector<Matrix>& d_output, Generator& grads) {
  std::vector<Matrix> d_hidden(d_output.size());
  for (std::size_t t = 0; t < d_output.size(); ++t) {
    grads.out_w.noalias() += d_output[t] * gp.trunk.decoder.hidden[t].transpose();
    grads.out_b.col(0) += d_output[t].rowwise().sum();
    d_hidden[t].noalias() = g.out_w.transpose() * d_output[t];
  }
  trunk_backward(g.body, input, gp.trunk, d_hidden, grads.body);
}

struct DiscriminatorPass {
  TrunkPass trunk;
  Eigen::RowVectorXd logits;
};

DiscriminatorPass discriminator_forward(const Discriminator& d, const nn::SequenceBatch& input) {
  DiscriminatorPass dp;
  dp.trunk = trunk_forward(d.body, input);
  const int hidden = d.body.decoder.hidden();
  const int b = input.batch_size();
  Matrix pooled = Matrix::Zero(hidden, b);
  for (int j = 0; j < b; ++j) {
    for (int t = 0; t < input.lengths[j]; ++t) pooled.col(j) += dp.trunk.decoder.hidden[t].col(j);
    pooled.col(j) /= static_cast<double>(input.lengths[j]);
  }
  dp.logits = (d.head_w * pooled).row(0);
  dp.logits.array() += d.head_b(0, 0);
  return dp;
}

// d_logits is dLoss/dlogit per item; returns the gradient w.r.t. D's input.
std::vector<Matrix> discriminator_backward(const Discriminator& d, const nn::SequenceBatch& input,
                                           const DiscriminatorPass& dp,
                                           const Eigen::RowVectorXd& d_logits, Discriminator& grads) {
  const int hidden = d.body.decoder.hidden();
  const int b = input.batch_size();
  Matrix pooled = Matrix::Zero(hidden, b);
  for (int j = 0; j < b; ++j) {
    for (int t = 0; t < input.lengths[j]; ++t) pooled.col(j) += dp.trunk.decoder.hidden[t].col(j);
    pooled.col(j) /= static_cast<double>(input.lengths[j]);
  }
  grads.head_w.noalias() += d_logits * pooled.transpose();
  grads.head_b(0, 0) += d_logits.sum();
  std::vector<Matrix> d_hidden(input.num_steps(), Matrix::Zero(hidden, b));
  for (int j = 0; j < b; ++j) {
    const Eigen::VectorXd g = d.head_w.row(0).transpose() * (d_logits(j) / input.lengths[j]);
    for (int t = 0; t < input.lengths[j]; ++t) d_hidden[t].col(j) = g;
  }
  return trunk_backward(d.body, input, dp.trunk, d_hidden, grads.body);
}

// Squared error over the valid frames and its gradient, normalised by the
// number of valid (frame, descriptor) cells.
double masked_mse(const nn::SequenceBatch& output, const nn::SequenceBatch& target,
                  std::vector<Matrix>* d_output) {
  const int dim = static_cast<int>(output.steps.front().rows());
  const double cells = static_cast<double>(output.total_valid_steps()) * dim;
  double sum = 0.0;
  if (d_output) d_output->assign(output.num_steps(), Matrix::Zero(dim, output.batch_size()));
  for (int j = 0; j < output.batch_size(); ++j) {
    for (int t = 0; t < output.lengths[j]; ++t) {
      const Eigen::VectorXd diff = output.steps[t].col(j) - target.steps[t].col(j);
      sum += diff.squaredNorm();
      if (d_output) (*d_output)[t].col(j) = diff * (2.0 / cells);
    }
  }
  return sum / cells;
}

void add_scaled(std::vector<Matrix>& acc, const std::vector<Matrix>& extra, double scale) {
  for (std::size_t t = 0; t < acc.size(); ++t) acc[t] += scale * extra[t];
}

std::vector<const FeatureSequence*> noisy_of(std::span<const SequencePair* const> batch) {
  std::vector<const FeatureSequence*> out;
  for (const SequencePair* p : batch) out.push_back(&p->noisy);
  return out;
}

std::vector<const FeatureSequence*> clean_of(std::span<const SequencePair* const> batch) {
  std::vector<const FeatureSequence*> out;
  for (const SequencePair* p : batch) out.push_back(&p->clean);
  return out;
}

void check_pairs(std::span<const SequencePair* const> batch, int dim) {
  if (batch.empty()) throw Error(ErrorCode::kEmptySet, "empty batch");
  for (const SequencePair* p : batch) {
    if (p->noisy.num_frames() != p->clean.num_frames() || p->noisy.dim() != p->clean.dim()) {
      throw Error(ErrorCode::kShapeMismatch, "noisy and clean sequences differ in shape");
    }
    if (p->noisy.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "sequence dimension does not match the GAN");
    }
  }
}

EncoderDecoder init_trunk(const GanArchitecture& arch, Rng& rng) {
  EncoderDecoder t;
  t.encoder = nn::make_lstm(arch.input_dim, arch.encoder_hidden, rng);
  t.bottleneck_w = nn::uniform_init(arch.bottleneck, arch.encoder_hidden, rng);
  t.bottleneck_b = Matrix::Zero(arch.bottleneck, 1);
  t.decoder = nn::make_lstm(arch.bottleneck, arch.decoder_hidden, rng);
  return t;
}

nn::OptimizerConfig rmsprop(double lr, double clip) {
  nn::OptimizerConfig c;
  c.kind = nn::OptimizerKind::kRmsProp;
  c.learning_rate = lr;
  c.clip_norm = clip;
  return c;
}

// Cycles through a reshuffled permutation of [0, n).
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng_.shuffle(order_.begin(), order_.end());
  }
  std::vector<std::size_t> next(std::size_t count) {
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < std::min(count, order_.size())) {
      if (pos_ == order_.size()) {
        rng_.shuffle(order_.begin(), order_.end());
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t pos_ = 0;
};

nlohmann::json arch_to_json(const GanArchitecture& a) {
  return {{"input_dim", a.input_dim},
          {"encoder_hidden", a.encoder_hidden},
          {"bottleneck", a.bottleneck},
          {"decoder_hidden", a.decoder_hidden}};
}

}  // namespace

void validate(const GanArchitecture& arch) {
  if (arch.input_dim <= 0 || arch.encoder_hidden <= 0 || arch.bottleneck <= 0 || arch.decoder_hidden <= 0) {
    throw Error(ErrorCode::kConfigError, "GAN layer sizes must be positive");
  }
}

void validate(const GanTrainConfig& config) {
  validate(config.architecture);
  if (!(config.learning_rate > 0.0) || !(config.pretrain_learning_rate > 0.0)) {
    throw Error(ErrorCode::kConfigError, "GAN learning rates must be positive");
  }
  if (config.batch_size <= 0 || config.d_steps_per_g_step <= 0 || config.pretrain_epochs < 0 ||
      config.max_steps < 0 || config.checkpoint_every <= 0) {
    throw Error(ErrorCode::kConfigError, "invalid GAN schedule");
  }
  if (!(config.lambda_mse >= 0.0)) throw Error(ErrorCode::kConfigError, "lambda must be >= 0");
}

Generator init_generator(const GanArchitecture& arch, std::uint64_t seed) {
  validate(arch);
  Rng rng(seed);
  Generator g;
  g.body = init_trunk(arch, rng);
  g.out_w = nn::uniform_init(arch.input_dim, arch.decoder_hidden, rng);
  g.out_b = Matrix::Zero(arch.input_dim, 1);
  return g;
}

Discriminator init_discriminator(const GanArchitecture& arch, std::uint64_t seed) {
  validate(arch);
  Rng rng(seed);
  Discriminator d;
  d.body = init_trunk(arch, rng);
  d.head_w = nn::uniform_init(1, arch.decoder_hidden, rng);
  d.head_b = Matrix::Zero(1, 1);
  return d;
}

GanParams init_gan(const GanArchitecture& arch, std::uint64_t seed) {
  return {init_generator(arch, derive_seed(seed, {1})), init_discriminator(arch, derive_seed(seed, {2}))};
}

double sequence_mse(const FeatureSequence& a, const FeatureSequence& b) {
  if (a.frames.rows() != b.frames.rows() || a.frames.cols() != b.frames.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "sequences differ in shape");
  }
  if (a.frames.size() == 0) return 0.0;
  return (a.frames - b.frames).squaredNorm() / static_cast<double>(a.frames.size());
}

std::vector<FeatureSequence> gan_clean(const Generator& g, std::span<const FeatureSequence> seqs) {
  constexpr std::size_t kChunk = 64;
  std::vector<FeatureSequence> out;
  out.reserve(seqs.size());
  for (std::size_t start = 0; start < seqs.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, seqs.size() - start);
    std::vector<const FeatureSequence*> ptrs;
    for (std::size_t i = 0; i < n; ++i) ptrs.push_back(&seqs[start + i]);
    const nn::SequenceBatch input = make_sequence_batch(ptrs, g.input_dim());
    const GeneratorPass gp = generator_forward(g, input);
    for (std::size_t i = 0; i < n; ++i) {
      FeatureSequence s = *ptrs[i];
      for (int t = 0; t < s.num_frames(); ++t) {
        s.frames.row(t) = gp.output.steps[t].col(static_cast<long>(i)).transpose();
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

FeatureSequence gan_clean(const Generator& g, const FeatureSequence& seq) {
  return gan_clean(g, std::span<const FeatureSequence>(&seq, 1)).front();
}

double generator_mse(const Generator& g, std::span<const SequencePair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptySet, "empty pair set");
  double sum = 0.0;
  double cells = 0.0;
  std::vector<FeatureSequence> noisy;
  noisy.reserve(pairs.size());
  for (const auto& p : pairs) noisy.push_back(p.noisy);
  const auto cleaned = gan_clean(g, noisy);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double n = static_cast<double>(pairs[i].clean.frames.size());
    sum += sequence_mse(cleaned[i], pairs[i].clean) * n;
    cells += n;
  }
  return cells > 0.0 ? sum / cells : 0.0;
}

GeneratorLoss reconstruction_loss(const Generator& g, std::span<const SequencePair* const> batch) {
  check_pairs(batch, g.input_dim());
  const nn::SequenceBatch input = make_sequence_batch(noisy_of(batch), g.input_dim());
  const nn::SequenceBatch target = make_sequence_batch(clean_of(batch), g.input_dim());
  const GeneratorPass gp = generator_forward(g, input);
  std::vector<Matrix> d_out;
  GeneratorLoss loss;
  loss.mse = masked_mse(gp.output, target, &d_out);
  loss.total = loss.mse;
  loss.gradients = nn::zeros_like_params(g);
  generator_backward(g, input, gp, d_out, loss.gradients);
  return loss;
}

std::vector<double> discriminate(const Discriminator& d, std::span<const FeatureSequence* const> seqs) {
  const nn::SequenceBatch input = make_sequence_batch(seqs, d.input_dim());
  const DiscriminatorPass dp = discriminator_forward(d, input);
  std::vector<double> out(seqs.size());
  for (std::size_t j = 0; j < seqs.size(); ++j) out[j] = nn::sigmoid(dp.logits(static_cast<long>(j)));
  return out;
}

DiscriminatorLoss discriminator_loss(const Discriminator& d, const Generator& g,
                                     std::span<const SequencePair* const> batch) {
  check_pairs(batch, g.input_dim());
  const nn::SequenceBatch real = make_sequence_batch(clean_of(batch), d.input_dim());
  const nn::SequenceBatch noisy = make_sequence_batch(noisy_of(batch), g.input_dim());
  const nn::SequenceBatch fake = generator_forward(g, noisy).output;
  const double b = static_cast<double>(batch.size());

  DiscriminatorLoss loss;
  loss.gradients = nn::zeros_like_params(d);
  const DiscriminatorPass real_pass = discriminator_forward(d, real);
  const DiscriminatorPass fake_pass = discriminator_forward(d, fake);
  Eigen::RowVectorXd d_real(real_pass.logits.size());
  Eigen::RowVectorXd d_fake(fake_pass.logits.size());
  for (long j = 0; j < real_pass.logits.size(); ++j) {
    const double ar = real_pass.logits(j);
    const double af = fake_pass.logits(j);
    // -log D = softplus(-a), -log(1 - D) = softplus(a)
    loss.total += (nn::softplus(-ar) + nn::softplus(af)) / b;
    loss.real_prob += nn::sigmoid(ar) / b;
    loss.fake_prob += nn::sigmoid(af) / b;
    d_real(j) = (nn::sigmoid(ar) - 1.0) / b;
    d_fake(j) = nn::sigmoid(af) / b;
  }
  discriminator_backward(d, real, real_pass, d_real, loss.gradients);
  discriminator_backward(d, fake, fake_pass, d_fake, loss.gradients);
  return loss;
}

GeneratorLoss generator_loss(const Generator& g, const Discriminator& d,
                             std::span<const SequencePair* const> batch, double lambda_mse) {
  check_pairs(batch, g.input_dim());
  const nn::SequenceBatch input = make_sequence_batch(noisy_of(batch), g.input_dim());
  const nn::SequenceBatch target = make_sequence_batch(clean_of(batch), g.input_dim());
  const GeneratorPass gp = generator_forward(g, input);
  const double b = static_cast<double>(batch.size());

  GeneratorLoss loss;
  const DiscriminatorPass dp = discriminator_forward(d, gp.output);
  Eigen::RowVectorXd d_logits(dp.logits.size());
  for (long j = 0; j < dp.logits.size(); ++j) {
    loss.adversarial -= nn::softplus(dp.logits(j)) / b;
    d_logits(j) = -nn::sigmoid(dp.logits(j)) / b;
  }
  Discriminator unused = nn::zeros_like_params(d);
  std::vector<Matrix> d_out = discriminator_backward(d, gp.output, dp, d_logits, unused);

  std::vector<Matrix> d_mse;
  loss.mse = masked_mse(gp.output, target, &d_mse);
  if (lambda_mse != 0.0) add_scaled(d_out, d_mse, lambda_mse);
  loss.total = loss.adversarial + lambda_mse * loss.mse;

  loss.gradients = nn::zeros_like_params(g);
  generator_backward(g, input, gp, d_out, loss.gradients);
  return loss;
}

Generator gan_pretrain(const Generator& g, std::span<const FeatureSequence> clean,
                       const GanTrainConfig& config, std::vector<double>* epoch_mse) {
  validate(config);
  if (clean.empty()) throw Error(ErrorCode::kEmptySet, "no clean sequences to pre-train on");
  std::vector<SequencePair> pairs;
  pairs.reserve(clean.size());
  for (const auto& s : clean) pairs.push_back({s, s});
  Generator out = g;
  nn::Optimizer opt(rmsprop(config.pretrain_learning_rate, config.clip_norm));
  Rng rng(derive_seed(config.seed, {fnv1a64("pretrain")}));
  std::vector<const SequencePair*> order;
  for (const auto& p : pairs) order.push_back(&p);
  for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min<std::size_t>(config.batch_size, order.size() - start);
      const GeneratorLoss loss = reconstruction_loss(out, std::span<const SequencePair* const>(order).subspan(start, n));
      opt.step(out, loss.gradients);
      sum += loss.mse;
      ++n_batches;
    }
    if (epoch_mse) epoch_mse->push_back(sum / static_cast<double>(n_batches));
  }
  return out;
}

GanTrainResult gan_train(std::span<const SequencePair> pairs, const GanTrainConfig& config) {
  validate(config);
  if (pairs.empty()) throw Error(ErrorCode::kEmptySet, "no training pairs");
  std::vector<const SequencePair*> all;
  for (const auto& p : pairs) all.push_back(&p);
  check_pairs(all, config.architecture.input_dim);

  GanTrainResult result;
  GanParams params = init_gan(config.architecture, config.seed);
  std::vector<FeatureSequence> clean;
  clean.reserve(pairs.size());
  for (const auto& p : pairs) clean.push_back(p.clean);
  params.generator = gan_pretrain(params.generator, clean, config, &result.pretrain_mse);

  result.best_mse = generator_mse(params.generator, pairs);
  Generator best = params.generator;
  nn::Optimizer opt_d(rmsprop(config.learning_rate, config.clip_norm));
  nn::Optimizer opt_g(rmsprop(config.learning_rate, config.clip_norm));
  BatchSampler sampler(pairs.size(), derive_seed(config.seed, {fnv1a64("batches")}));
  auto draw = [&] {
    std::vector<const SequencePair*> batch;
    for (std::size_t i : sampler.next(static_cast<std::size_t>(config.batch_size))) batch.push_back(&pairs[i]);
    return batch;
  };

  result.history.reserve(static_cast<std::size_t>(config.max_steps));
  for (int step = 1; step <= config.max_steps; ++step) {
    GanStepRecord rec;
    rec.step = step;
    for (int k = 0; k < config.d_steps_per_g_step; ++k) {
      const auto batch = draw();
      const DiscriminatorLoss dl = discriminator_loss(params.discriminator, params.generator, batch);
      opt_d.step(params.discriminator, dl.gradients);
      ++result.d_updates;
      rec.d_loss += dl.total / config.d_steps_per_g_step;
      rec.d_real += dl.real_prob / config.d_steps_per_g_step;
      rec.d_fake += dl.fake_prob / config.d_steps_per_g_step;
    }
    const auto batch = draw();
    const GeneratorLoss gl = generator_loss(params.generator, params.discriminator, batch, config.lambda_mse);
    opt_g.step(params.generator, gl.gradients);
    ++result.g_updates;
    rec.g_adv_loss = gl.adversarial;
    rec.g_mse = gl.mse;
    result.history.push_back(rec);

    if (step % config.checkpoint_every == 0 || step == config.max_steps) {
      const double mse = generator_mse(params.generator, pairs);
      if (mse < result.best_mse) {
        result.best_mse = mse;
        result.best_step = step;
        best = params.generator;
      }
    }
  }
  result.params.generator = std::move(best);
  result.params.discriminator = std::move(params.discriminator);
  return result;
}

void save_gan(const GanParams& params, const GanArchitecture& arch, const std::filesystem::path& path) {
  nlohmann::json j = {{"format", "serforge-gan"},
                      {"version", 1},
                      {"architecture", arch_to_json(arch)},
                      {"tensors", tensors_to_json(params)}};
  write_json_file(j, path.string());
}

GanParams load_gan(const std::filesystem::path& path, GanArchitecture* arch_out) {
  const nlohmann::json j = read_json_file(path.string());
  try {
    if (j.at("format").get<std::string>() != "serforge-gan") {
      throw Error(ErrorCode::kCorruptHeader, "not a GAN checkpoint: " + path.string());
    }
    if (j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kUnsupportedFormat, "unsupported GAN checkpoint version");
    }
    const auto& a = j.at("architecture");
    GanArchitecture arch{a.at("input_dim").get<int>(), a.at("encoder_hidden").get<int>(),
                         a.at("bottleneck").get<int>(), a.at("decoder_hidden").get<int>()};
    GanParams params = init_gan(arch, 0);
    tensors_from_json(params, j.at("tensors"));
    if (arch_out) *arch_out = arch;
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptHeader, std::string("malformed GAN checkpoint: ") + e.what());
  }
}

}  // namespace serforge
