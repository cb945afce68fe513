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

#include "serforge/nn.hpp"

#include <cmath>

#include "serforge/error.hpp"

namespace serforge::nn {

namespace {

// Written in terms of exp so Eigen can vectorise them.
template <typename Block>
void sigmoid_in_place(Block&& b) {
  b = (1.0 + (-b.array()).exp()).inverse().matrix();
}

template <typename Block>
void tanh_in_place(Block&& b) {
  b = (2.0 * (1.0 + (-2.0 * b.array()).exp()).inverse() - 1.0).matrix();
}

}  // namespace

bool SequenceBatch::uniform_length() const {
  for (int len : lengths) {
    if (len != num_steps()) return false;
  }
  return true;
}

Eigen::RowVectorXd SequenceBatch::mask(int t) const {
  Eigen::RowVectorXd m(batch_size());
  for (int b = 0; b < batch_size(); ++b) m(b) = t < lengths[b] ? 1.0 : 0.0;
  return m;
}

int SequenceBatch::total_valid_steps() const {
  int n = 0;
  for (int len : lengths) n += len;
  return n;
}

Matrix uniform_init(int rows, int cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  Matrix m(rows, cols);
  // Column-major fill order keeps initialisation independent of Eigen's
  // expression evaluation order.
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

LstmParams make_lstm(int input_dim, int hidden, Rng& rng, double forget_bias) {
  if (input_dim <= 0 || hidden <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "LSTM sizes must be positive");
  }
  LstmParams p;
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim + hidden));
  auto fill = [&](Matrix& m, int rows, int cols) {
    m.resize(rows, cols);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
    }
  };
  fill(p.w_input, 4 * hidden, input_dim);
  fill(p.w_recurrent, 4 * hidden, hidden);
  p.bias = Matrix::Zero(4 * hidden, 1);
  p.bias.block(hidden, 0, hidden, 1).setConstant(forget_bias);
  return p;
}

LstmParams zeros_like(const LstmParams& p) {
  LstmParams z;
  z.w_input = Matrix::Zero(p.w_input.rows(), p.w_input.cols());
  z.w_recurrent = Matrix::Zero(p.w_recurrent.rows(), p.w_recurrent.cols());
  z.bias = Matrix::Zero(p.bias.rows(), 1);
  return z;
}

SequenceBatch as_batch(std::vector<Matrix> steps, const std::vector<int>& lengths) {
  SequenceBatch b;
  b.steps = std::move(steps);
  b.lengths = lengths;
  return b;
}

LstmCache lstm_forward(const LstmParams& p, const SequenceBatch& inputs) {
  const int hidden = p.hidden();
  const int batch = inputs.batch_size();
  const int steps = inputs.num_steps();
  if (steps == 0) throw Error(ErrorCode::kInvalidArgument, "empty sequence batch");
  if (inputs.steps.front().rows() != p.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "LSTM expects input dim " + std::to_string(p.input_dim()) + ", got " +
                    std::to_string(inputs.steps.front().rows()));
  }
  const bool masked = !inputs.uniform_length();

  LstmCache cache;
  cache.gates.resize(steps);
  cache.cell.resize(steps);
  cache.tanh_cell.resize(steps);
  cache.hidden.resize(steps);

  Matrix h_prev = Matrix::Zero(hidden, batch);
  Matrix c_prev = Matrix::Zero(hidden, batch);
  for (int t = 0; t < steps; ++t) {
    Matrix z = p.w_input * inputs.steps[t] + p.w_recurrent * h_prev;
    z.colwise() += p.bias.col(0);
    sigmoid_in_place(z.middleRows(0, 2 * hidden));
    tanh_in_place(z.middleRows(2 * hidden, hidden));
    sigmoid_in_place(z.middleRows(3 * hidden, hidden));

    Matrix c = z.middleRows(hidden, hidden).cwiseProduct(c_prev) +
               z.middleRows(0, hidden).cwiseProduct(z.middleRows(2 * hidden, hidden));
    Matrix tc = c;
    tanh_in_place(tc);
    Matrix h = z.middleRows(3 * hidden, hidden).cwiseProduct(tc);
    if (masked) {
      const Eigen::RowVectorXd m = inputs.mask(t);
      for (int b = 0; b < batch; ++b) {
        if (m(b) == 0.0) {
          c.col(b) = c_prev.col(b);
          h.col(b) = h_prev.col(b);
        }
      }
    }
    cache.gates[t] = std::move(z);
    cache.tanh_cell[t] = std::move(tc);
    cache.cell[t] = c;
    cache.hidden[t] = h;
    c_prev = std::move(c);
    h_prev = std::move(h);
  }
  return cache;
}

std::vector<Matrix> lstm_backward(const LstmParams& p, const SequenceBatch& inputs,
                                  const LstmCache& cache, const std::vector<Matrix>& d_hidden,
                                  LstmParams& grads) {
  const int hidden = p.hidden();
  const int batch = inputs.batch_size();
  const int steps = inputs.num_steps();
  const bool masked = !inputs.uniform_length();

  std::vector<Matrix> d_inputs(steps);
  Matrix dh_next = Matrix::Zero(hidden, batch);
  Matrix dc_next = Matrix::Zero(hidden, batch);
  const Matrix zeros = Matrix::Zero(hidden, batch);
  Matrix dz(4 * hidden, batch);

  for (int t = steps - 1; t >= 0; --t) {
    const Matrix& gates = cache.gates[t];
    const Matrix& c_prev = t > 0 ? cache.cell[t - 1] : zeros;
    const Matrix& h_prev = t > 0 ? cache.hidden[t - 1] : zeros;
    const auto gi = gates.middleRows(0, hidden).array();
    const auto gf = gates.middleRows(hidden, hidden).array();
    const auto gg = gates.middleRows(2 * hidden, hidden).array();
    const auto go = gates.middleRows(3 * hidden, hidden).array();
    const auto tc = cache.tanh_cell[t].array();

    const Matrix dh = d_hidden[t] + dh_next;
    const Eigen::ArrayXXd dc = dc_next.array() + dh.array() * go * (1.0 - tc * tc);

    dz.middleRows(0, hidden) = (dc * gg * gi * (1.0 - gi)).matrix();
    dz.middleRows(hidden, hidden) = (dc * c_prev.array() * gf * (1.0 - gf)).matrix();
    dz.middleRows(2 * hidden, hidden) = (dc * gi * (1.0 - gg * gg)).matrix();
    dz.middleRows(3 * hidden, hidden) = (dh.array() * tc * go * (1.0 - go)).matrix();

    Matrix dc_prev = (dc * gf).matrix();
    if (masked) {
      const Eigen::RowVectorXd m = inputs.mask(t);
      for (int b = 0; b < batch; ++b) {
        if (m(b) == 0.0) {
          dz.col(b).setZero();
          dc_prev.col(b) = dc_next.col(b);
        }
      }
    }

    grads.w_input.noalias() += dz * inputs.steps[t].transpose();
    grads.w_recurrent.noalias() += dz * h_prev.transpose();
    grads.bias.col(0) += dz.rowwise().sum();
    d_inputs[t].noalias() = p.w_input.transpose() * dz;

    Matrix dh_prev = p.w_recurrent.transpose() * dz;
    if (masked) {
      const Eigen::RowVectorXd m = inputs.mask(t);
      for (int b = 0; b < batch; ++b) {
        if (m(b) == 0.0) dh_prev.col(b) += dh.col(b);
      }
    }
    dh_next = std::move(dh_prev);
    dc_next = std::move(dc_prev);
  }
  return d_inputs;
}

std::string optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kRmsProp: return "rmsprop";
  }
  return "adam";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "rmsprop") return OptimizerKind::kRmsProp;
  throw Error(ErrorCode::kConfigError, "unknown optimizer '" + name + "'");
}

void Optimizer::apply(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter and gradient tensor counts differ");
  }
  if (first_.empty()) {
    for (const Matrix* p : params) {
      first_.push_back(Matrix::Zero(p->rows(), p->cols()));
      second_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  ++steps_;
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const Matrix* g : grads) sq += g->squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }
  const double lr = config_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix g = *grads[i] * scale;
    switch (config_.kind) {
      case OptimizerKind::kSgd:
        p -= lr * g;
        break;
      case OptimizerKind::kAdam: {
        first_[i] = config_.beta1 * first_[i] + (1.0 - config_.beta1) * g;
        second_[i] = config_.beta2 * second_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
        const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
        p.array() -= lr * (first_[i].array() / c1) /
                     ((second_[i].array() / c2).sqrt() + config_.epsilon);
        break;
      }
      case OptimizerKind::kRmsProp:
        second_[i] = config_.rho * second_[i] + (1.0 - config_.rho) * g.cwiseProduct(g);
        p.array() -= lr * g.array() / (second_[i].array().sqrt() + config_.epsilon);
        break;
    }
  }
}

}  // namespace serforge::nn
