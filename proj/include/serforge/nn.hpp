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

#ifndef SERFORGE_NN_HPP_
#define SERFORGE_NN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "serforge/random.hpp"

namespace serforge::nn {

using Matrix = Eigen::MatrixXd;

// A batch of variable-length sequences laid out time-major: steps[t] is
// (input_dim x batch). Columns past a sequence's length are padding; the
// recurrent state of that column is frozen there.
struct SequenceBatch {
  std::vector<Matrix> steps;
  std::vector<int> lengths;

  int num_steps() const { return static_cast<int>(steps.size()); }
  int batch_size() const { return static_cast<int>(lengths.size()); }
  bool uniform_length() const;
  // 1 x batch row of 1.0 (valid) / 0.0 (padding) for step t.
  Eigen::RowVectorXd mask(int t) const;
  int total_valid_steps() const;
};

// Gate rows are stacked [input; forget; cell; output], hidden rows each.
struct LstmParams {
  Matrix w_input;      // 4H x I
  Matrix w_recurrent;  // 4H x H
  Matrix bias;         // 4H x 1

  int hidden() const { return static_cast<int>(w_recurrent.cols()); }
  int input_dim() const { return static_cast<int>(w_input.cols()); }

  template <typename F>
  void for_each(const std::string& prefix, F&& f) {
    f(prefix + ".w_input", w_input);
    f(prefix + ".w_recurrent", w_recurrent);
    f(prefix + ".bias", bias);
  }
  template <typename F>
  void for_each(const std::string& prefix, F&& f) const {
    f(prefix + ".w_input", w_input);
    f(prefix + ".w_recurrent", w_recurrent);
    f(prefix + ".bias", bias);
  }
};

// Uniform(+-1/sqrt(fan_in)) weights, zero biases except the forget gate.
LstmParams make_lstm(int input_dim, int hidden, Rng& rng, double forget_bias = 1.0);
LstmParams zeros_like(const LstmParams& p);

// Uniform(+-1/sqrt(cols)) matrix.
Matrix uniform_init(int rows, int cols, Rng& rng);

struct LstmCache {
  std::vector<Matrix> gates;   // activated, 4H x B per step
  std::vector<Matrix> cell;    // state after masking, H x B
  std::vector<Matrix> tanh_cell;
  std::vector<Matrix> hidden;  // output after masking, H x B
};

// Runs the layer over `inputs`; the returned hidden states are the layer's
// output sequence.
LstmCache lstm_forward(const LstmParams& p, const SequenceBatch& inputs);

// Backpropagation through time. d_hidden[t] is the loss gradient w.r.t. the
// layer output at step t. Accumulates parameter gradients into `grads` and
// returns the gradient w.r.t. each input step.
std::vector<Matrix> lstm_backward(const LstmParams& p, const SequenceBatch& inputs,
                                  const LstmCache& cache, const std::vector<Matrix>& d_hidden,
                                  LstmParams& grads);

// Wraps the hidden outputs of a layer as the next layer's input batch.
SequenceBatch as_batch(std::vector<Matrix> steps, const std::vector<int>& lengths);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

enum class OptimizerKind { kSgd, kAdam, kRmsProp };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;  // RMSProp decay
  double epsilon = 1e-8;
  // Rescale the global gradient norm to at most this value; 0 disables.
  double clip_norm = 0.0;
};

std::string optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

// First-order optimiser over any parameter struct exposing for_each(prefix, f).
// State is allocated on the first step in visitation order.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  double learning_rate() const { return config_.learning_rate; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::int64_t steps() const { return steps_; }

  template <typename Params>
  void step(Params& params, const Params& grads) {
    std::vector<Matrix*> p;
    std::vector<const Matrix*> g;
    params.for_each("", [&](const std::string&, Matrix& m) { p.push_back(&m); });
    grads.for_each("", [&](const std::string&, const Matrix& m) { g.push_back(&m); });
    apply(p, g);
  }

 private:
  void apply(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);

  OptimizerConfig config_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  std::int64_t steps_ = 0;
};

template <typename Params>
Params zeros_like_params(const Params& p) {
  Params z = p;
  z.for_each("", [](const std::string&, Matrix& m) { m.setZero(); });
  return z;
}

template <typename Params>
double squared_norm(const Params& p) {
  double acc = 0.0;
  p.for_each("", [&](const std::string&, const Matrix& m) { acc += m.squaredNorm(); });
  return acc;
}

template <typename Params>
bool all_finite(const Params& p) {
  bool ok = true;
  p.for_each("", [&](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

template <typename Params>
std::size_t parameter_count(const Params& p) {
  std::size_t n = 0;
  p.for_each("", [&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

}  // namespace serforge::nn

#endif  // SERFORGE_NN_HPP_
