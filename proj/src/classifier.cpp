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

#include "serforge/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "serforge/error.hpp"
#include "serforge/json_io.hpp"

namespace serforge {

namespace {

using nn::Matrix;

constexpr int kEvalChunk = 64;

struct ForwardPass {
  nn::SequenceBatch input;
  nn::LstmCache layer1;
  nn::SequenceBatch layer2_input;
  nn::LstmCache layer2;
  Matrix probs;  // 2 x B
};

ForwardPass run_forward(const ModelParams& params, std::span<const FeatureSequence* const> seqs) {
  ForwardPass fp;
  fp.input = make_sequence_batch(seqs, params.input_dim());
  fp.layer1 = nn::lstm_forward(params.lstm1, fp.input);
  fp.layer2_input = nn::as_batch(fp.layer1.hidden, fp.input.lengths);
  fp.layer2 = nn::lstm_forward(params.lstm2, fp.layer2_input);
  Matrix logits = params.dense_w * fp.layer2.hidden.back();
  logits.colwise() += params.dense_b.col(0);
  fp.probs.resize(2, logits.cols());
  for (int b = 0; b < logits.cols(); ++b) {
    const double m = logits.col(b).maxCoeff();
    const double e0 = std::exp(logits(0, b) - m);
    const double e1 = std::exp(logits(1, b) - m);
    fp.probs(0, b) = e0 / (e0 + e1);
    fp.probs(1, b) = e1 / (e0 + e1);
  }
  return fp;
}

double nll(const Matrix& probs, int col, int label) {
  return -std::log(std::max(probs(label, col), std::numeric_limits<double>::min()));
}

int argmax(double p0, double p1) { return p1 > p0 ? 1 : 0; }

}  // namespace

nn::SequenceBatch make_sequence_batch(std::span<const FeatureSequence* const> seqs, int input_dim) {
  nn::SequenceBatch batch;
  int steps = 0;
  for (const FeatureSequence* s : seqs) {
    if (s->dim() != input_dim) {
      throw Error(ErrorCode::kDimensionMismatch, "sequence has " + std::to_string(s->dim()) +
                                                     " descriptors, model expects " +
                                                     std::to_string(input_dim));
    }
    if (s->num_frames() < 1) throw Error(ErrorCode::kInvalidArgument, "sequence has no frames");
    batch.lengths.push_back(s->num_frames());
    steps = std::max(steps, s->num_frames());
  }
  const int b = static_cast<int>(seqs.size());
  batch.steps.assign(steps, Matrix::Zero(input_dim, b));
  for (int j = 0; j < b; ++j) {
    const Matrix& frames = seqs[j]->frames;
    for (int t = 0; t < frames.rows(); ++t) batch.steps[t].col(j) = frames.row(t).transpose();
  }
  return batch;
}

ModelParams init_model(int input_dim, int hidden1, int hidden2, std::uint64_t seed) {
  Rng rng(seed);
  ModelParams p;
  p.lstm1 = nn::make_lstm(input_dim, hidden1, rng);
  p.lstm2 = nn::make_lstm(hidden1, hidden2, rng);
  p.dense_w = nn::uniform_init(kNumClasses, hidden2, rng);
  p.dense_b = Matrix::Zero(kNumClasses, 1);
  return p;
}

void validate(const TrainConfig& config) {
  if (!(config.initial_lr > config.stop_lr && config.stop_lr > 0.0)) {
    throw Error(ErrorCode::kConfigError, "need initial_lr > stop_lr > 0");
  }
  if (config.batch_size <= 0 || config.max_epochs <= 0 || config.halve_every <= 0 ||
      config.hidden1 <= 0 || config.hidden2 <= 0) {
    throw Error(ErrorCode::kConfigError, "batch size, epochs, patience and hidden sizes must be positive");
  }
}

Metrics metrics_from_confusion(const std::array<std::array<long, 2>, 2>& confusion) {
  Metrics m;
  m.confusion = confusion;
  double recall_sum = 0.0;
  int classes = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const long support = confusion[c][0] + confusion[c][1];
    if (support == 0) continue;
    recall_sum += 100.0 * static_cast<double>(confusion[c][c]) / static_cast<double>(support);
    ++classes;
  }
  m.unweighted_accuracy = classes ? recall_sum / classes : 0.0;
  m.error_rate = 100.0 - m.unweighted_accuracy;
  return m;
}

std::vector<std::array<double, 2>> forward_batch(const ModelParams& params,
                                                 std::span<const FeatureSequence* const> seqs) {
  std::vector<std::array<double, 2>> out;
  out.reserve(seqs.size());
  for (std::size_t start = 0; start < seqs.size(); start += kEvalChunk) {
    const std::size_t n = std::min<std::size_t>(kEvalChunk, seqs.size() - start);
    const ForwardPass fp = run_forward(params, seqs.subspan(start, n));
    for (std::size_t b = 0; b < n; ++b) out.push_back({fp.probs(0, b), fp.probs(1, b)});
  }
  return out;
}

std::array<double, 2> forward(const ModelParams& params, const FeatureSequence& seq) {
  const FeatureSequence* ptr = &seq;
  return forward_batch(params, std::span<const FeatureSequence* const>(&ptr, 1)).front();
}

LossAndGradients loss_and_gradients(const ModelParams& params,
                                    std::span<const LabeledSequence* const> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyDataset, "empty batch");
  std::vector<const FeatureSequence*> seqs;
  seqs.reserve(batch.size());
  for (const LabeledSequence* item : batch) seqs.push_back(&item->seq);
  const ForwardPass fp = run_forward(params, seqs);
  const int b = static_cast<int>(batch.size());

  LossAndGradients out;
  out.gradients = nn::zeros_like_params(params);
  Matrix d_logits = fp.probs;
  for (int j = 0; j < b; ++j) {
    const int y = class_index(batch[j]->label);
    out.loss += nll(fp.probs, j, y);
    d_logits(y, j) -= 1.0;
  }
  out.loss /= b;
  d_logits /= b;

  const Matrix& h_last = fp.layer2.hidden.back();
  out.gradients.dense_w.noalias() = d_logits * h_last.transpose();
  out.gradients.dense_b.col(0) = d_logits.rowwise().sum();

  std::vector<Matrix> d_hidden2(fp.input.num_steps(), Matrix::Zero(params.lstm2.hidden(), b));
  d_hidden2.back() = params.dense_w.transpose() * d_logits;
  const std::vector<Matrix> d_hidden1 =
      nn::lstm_backward(params.lstm2, fp.layer2_input, fp.layer2, d_hidden2, out.gradients.lstm2);
  nn::lstm_backward(params.lstm1, fp.input, fp.layer1, d_hidden1, out.gradients.lstm1);
  return out;
}

LossAndGradients loss_and_gradients(const ModelParams& params, std::span<const LabeledSequence> batch) {
  std::vector<const LabeledSequence*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& item : batch) ptrs.push_back(&item);
  return loss_and_gradients(params, std::span<const LabeledSequence* const>(ptrs));
}

std::vector<int> predict(const ModelParams& params, std::span<const LabeledSequence> dataset) {
  std::vector<const FeatureSequence*> seqs;
  seqs.reserve(dataset.size());
  for (const auto& item : dataset) seqs.push_back(&item.seq);
  const auto probs = forward_batch(params, seqs);
  std::vector<int> labels(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) labels[i] = argmax(probs[i][0], probs[i][1]);
  return labels;
}

Metrics evaluate(const ModelParams& params, std::span<const LabeledSequence> dataset) {
  if (dataset.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot evaluate an empty dataset");
  std::vector<const FeatureSequence*> seqs;
  seqs.reserve(dataset.size());
  for (const auto& item : dataset) seqs.push_back(&item.seq);
  const auto probs = forward_batch(params, seqs);
  std::array<std::array<long, 2>, 2> confusion{};
  double loss = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int y = class_index(dataset[i].label);
    ++confusion[y][argmax(probs[i][0], probs[i][1])];
    loss -= std::log(std::max(probs[i][y], std::numeric_limits<double>::min()));
  }
  Metrics m = metrics_from_confusion(confusion);
  m.mean_loss = loss / static_cast<double>(dataset.size());
  return m;
}

TrainResult train(std::span<const LabeledSequence> train_set, std::span<const LabeledSequence> eval_set,
                  const TrainConfig& config) {
  validate(config);
  if (train_set.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "training set is empty");
  if (eval_set.empty()) throw Error(ErrorCode::kEmptyDataset, "eval set is empty");
  std::array<long, 2> counts{};
  for (const auto& item : train_set) ++counts[class_index(item.label)];
  if (counts[0] == 0 || counts[1] == 0) {
    throw Error(ErrorCode::kSingleClassTrainingSet, "training set holds a single class");
  }

  const int input_dim = train_set.front().seq.dim();
  TrainResult result;
  ModelParams params = init_model(input_dim, config.hidden1, config.hidden2, derive_seed(config.seed, {1}));
  Rng rng(derive_seed(config.seed, {2}));
  nn::Optimizer optimizer({.kind = config.optimizer,
                           .learning_rate = config.initial_lr,
                           .clip_norm = config.clip_norm});

  std::vector<const LabeledSequence*> order;
  order.reserve(train_set.size());
  for (const auto& item : train_set) order.push_back(&item);

  double lr = config.initial_lr;
  double best_ua = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  result.params = params;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min<std::size_t>(config.batch_size, order.size() - start);
      const auto batch = std::span<const LabeledSequence* const>(order).subspan(start, n);
      const LossAndGradients lg = loss_and_gradients(params, batch);
      optimizer.step(params, lg.gradients);
      loss_sum += lg.loss * static_cast<double>(n);
      seen += n;
    }
    const Metrics m = evaluate(params, eval_set);
    result.history.push_back({epoch, lr, loss_sum / static_cast<double>(seen), m.unweighted_accuracy,
                              m.mean_loss});

    if (m.unweighted_accuracy > best_ua) {
      best_ua = m.unweighted_accuracy;
      best_loss = m.mean_loss;
      result.params = params;
      result.best_epoch = epoch;
      stale = 0;
    } else {
      if (config.ties_by_loss && m.unweighted_accuracy == best_ua && m.mean_loss < best_loss) {
        best_loss = m.mean_loss;
        result.params = params;
        result.best_epoch = epoch;
      }
      if (++stale >= config.halve_every) {
        lr *= 0.5;
        optimizer.set_learning_rate(lr);
        stale = 0;
      }
    }
    if (lr < config.stop_lr) break;
  }
  return result;
}

void save_model(const ModelCheckpoint& checkpoint, const std::filesystem::path& path) {
  const auto hidden = checkpoint.params.hidden_sizes();
  nlohmann::json j = {{"format", "serforge-lstm-classifier"},
                      {"version", 1},
                      {"input_dim", checkpoint.params.input_dim()},
                      {"hidden_sizes", {hidden[0], hidden[1]}},
                      {"frame_config", to_json(checkpoint.frame_config)},
                      {"tensors", tensors_to_json(checkpoint.params)}};
  if (checkpoint.standardization) {
    const auto& s = *checkpoint.standardization;
    j["standardization"] = {
        {"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
        {"std", std::vector<double>(s.std.data(), s.std.data() + s.std.size())}};
  }
  write_json_file(j, path.string());
}

ModelCheckpoint load_model(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path.string());
  try {
    if (j.at("format").get<std::string>() != "serforge-lstm-classifier" || j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kCorruptHeader, path.string() + " is not a version-1 classifier checkpoint");
    }
    const auto hidden = j.at("hidden_sizes").get<std::vector<int>>();
    if (hidden.size() != 2) throw Error(ErrorCode::kCorruptHeader, "hidden_sizes must hold two values");
    ModelCheckpoint ck;
    ck.params = init_model(j.at("input_dim").get<int>(), hidden[0], hidden[1], 0);
    tensors_from_json(ck.params, j.at("tensors"));
    ck.frame_config = frame_config_from_json(j.at("frame_config"));
    if (j.contains("standardization")) {
      const auto mean = j["standardization"].at("mean").get<std::vector<double>>();
      const auto stdv = j["standardization"].at("std").get<std::vector<double>>();
      StandardizationStats s;
      s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<long>(mean.size()));
      s.std = Eigen::Map<const Eigen::VectorXd>(stdv.data(), static_cast<long>(stdv.size()));
      ck.standardization = s;
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": " + e.what());
  }
}

}  // namespace serforge
