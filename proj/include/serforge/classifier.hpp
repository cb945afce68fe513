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

#ifndef SERFORGE_CLASSIFIER_HPP_
#define SERFORGE_CLASSIFIER_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "serforge/features.hpp"
#include "serforge/labels.hpp"
#include "serforge/nn.hpp"

namespace serforge {

struct LabeledSequence {
  FeatureSequence seq;
  Valence label = Valence::kNegative;
};

// Two stacked LSTM layers, a dense layer on the last hidden state of the
// second layer, and a softmax over the two valence classes.
struct ModelParams {
  nn::LstmParams lstm1;
  nn::LstmParams lstm2;
  nn::Matrix dense_w;  // 2 x hidden2
  nn::Matrix dense_b;  // 2 x 1

  int input_dim() const { return lstm1.input_dim(); }
  std::array<int, 2> hidden_sizes() const { return {lstm1.hidden(), lstm2.hidden()}; }

  template <typename F>
  void for_each(const std::string& prefix, F&& f) {
    lstm1.for_each(prefix + "lstm1", f);
    lstm2.for_each(prefix + "lstm2", f);
    f(prefix + "dense.w", dense_w);
    f(prefix + "dense.b", dense_b);
  }
  template <typename F>
  void for_each(const std::string& prefix, F&& f) const {
    lstm1.for_each(prefix + "lstm1", f);
    lstm2.for_each(prefix + "lstm2", f);
    f(prefix + "dense.w", dense_w);
    f(prefix + "dense.b", dense_b);
  }
};

// Time-major batch of feature sequences; shorter sequences are padded and
// masked.
nn::SequenceBatch make_sequence_batch(std::span<const FeatureSequence* const> seqs, int input_dim);

ModelParams init_model(int input_dim, int hidden1, int hidden2, std::uint64_t seed);

struct TrainConfig {
  double initial_lr = 0.002;
  // Epochs without an eval-UA improvement before the rate is halved.
  int halve_every = 5;
  double stop_lr = 1e-5;
  int batch_size = 32;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  int hidden1 = 64;
  int hidden2 = 64;
  nn::OptimizerKind optimizer = nn::OptimizerKind::kAdam;
  double clip_norm = 5.0;
  // Among epochs tied at the best eval UA keep the one with the lowest eval
  // loss instead of the first.
  bool ties_by_loss = false;
};

void validate(const TrainConfig& config);

struct Metrics {
  double unweighted_accuracy = 0.0;  // percent
  double error_rate = 100.0;         // percent, 100 - UA
  // confusion[true][predicted]
  std::array<std::array<long, 2>, 2> confusion{};
  double mean_loss = 0.0;
};

// UA over the classes that have support; a class with no examples is skipped.
Metrics metrics_from_confusion(const std::array<std::array<long, 2>, 2>& confusion);

std::array<double, 2> forward(const ModelParams& params, const FeatureSequence& seq);
std::vector<std::array<double, 2>> forward_batch(const ModelParams& params,
                                                 std::span<const FeatureSequence* const> seqs);

struct LossAndGradients {
  double loss = 0.0;
  ModelParams gradients;
};

// Mean cross-entropy over the batch and its exact BPTT gradient.
LossAndGradients loss_and_gradients(const ModelParams& params,
                                    std::span<const LabeledSequence* const> batch);
LossAndGradients loss_and_gradients(const ModelParams& params, std::span<const LabeledSequence> batch);

Metrics evaluate(const ModelParams& params, std::span<const LabeledSequence> dataset);
// Predicted class index per item.
std::vector<int> predict(const ModelParams& params, std::span<const LabeledSequence> dataset);

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double eval_ua = 0.0;
  double eval_loss = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

// Mini-batch training with the step-halving schedule; returns the
// parameters from the first epoch that reached the best eval UA (see
// TrainConfig::ties_by_loss).
TrainResult train(std::span<const LabeledSequence> train_set, std::span<const LabeledSequence> eval_set,
                  const TrainConfig& config);

struct ModelCheckpoint {
  ModelParams params;
  std::optional<StandardizationStats> standardization;
  FrameConfig frame_config;
};

void save_model(const ModelCheckpoint& checkpoint, const std::filesystem::path& path);
ModelCheckpoint load_model(const std::filesystem::path& path);

}  // namespace serforge

#endif  // SERFORGE_CLASSIFIER_HPP_
