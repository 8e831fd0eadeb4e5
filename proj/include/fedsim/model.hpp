// Copyright 2026 The fedsim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedsim/data.hpp"
#include "fedsim/params.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class model_kind { logreg, mlp };
enum class activation { relu, tanh };

/// Client learner architecture.
///   logreg: layers W (d x K), b (1 x K)
///   mlp:    layers W1 (d x H), b1 (1 x H), W2 (H x K), b2 (1 x K)
struct ModelSpec {
  model_kind kind = model_kind::logreg;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::size_t hidden_dim = 0;  // mlp only
  activation act = activation::relu;

  void validate() const {
    if (input_dim == 0) throw std::invalid_argument("model input_dim must be positive");
    if (num_classes == 0) throw std::invalid_argument("model num_classes must be positive");
    if (kind == model_kind::mlp && hidden_dim == 0) {
      throw std::invalid_argument("mlp requires a positive hidden_dim");
    }
    if (kind == model_kind::logreg && hidden_dim != 0) {
      throw std::invalid_argument("hidden_dim is only valid for mlp");
    }
  }
};

struct TrainConfig {
  std::size_t local_epochs = 1;
  std::size_t batch_size = 10;
  double learning_rate = 0.05;

  void validate() const {
    if (local_epochs == 0) throw std::invalid_argument("local_epochs must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    // Zero is accepted here (a no-op step); run configs require a positive rate.
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw std::invalid_argument("learning_rate must be non-negative");
    }
  }
};

/// Glorot-uniform weights in [-s, s], s = sqrt(6 / (fan_in + fan_out)); zero biases.
inline ParamSet init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    Matrix w(fan_in, fan_out);
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w.values()) v = uniform_real(rng, -s, s);
    return w;
  };
  ParamSet p;
  if (spec.kind == model_kind::logreg) {
    p.add_layer("W", glorot(spec.input_dim, spec.num_classes));
    p.add_layer("b", Matrix(1, spec.num_classes));
  } else {
    p.add_layer("W1", glorot(spec.input_dim, spec.hidden_dim));
    p.add_layer("b1", Matrix(1, spec.hidden_dim));
    p.add_layer("W2", glorot(spec.hidden_dim, spec.num_classes));
    p.add_layer("b2", Matrix(1, spec.num_classes));
  }
  return p;
}

namespace detail {

inline void require_params_match(const ModelSpec& spec, const ParamSet& params) {
  const std::size_t expected_layers = spec.kind == model_kind::logreg ? 2 : 4;
  if (params.num_layers() != expected_layers) {
    throw shape_error("parameter set has " + std::to_string(params.num_layers()) +
                      " layers, model expects " + std::to_string(expected_layers));
  }
  if (params.layer(0).matrix.rows() != spec.input_dim) {
    throw shape_error("layer '" + params.layer(0).name + "' input width " +
                      std::to_string(params.layer(0).matrix.rows()) + " != " +
                      std::to_string(spec.input_dim));
  }
}

inline double act_fn(activation a, double x) {
  return a == activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

// Derivative in terms of pre-activation x and output y.
inline double act_grad(activation a, double x, double y) {
  return a == activation::relu ? (x > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

/// Logits for one row; `hidden` receives pre- and post-activation for mlp.
inline void forward_row(const ModelSpec& spec, const ParamSet& params, std::span<const double> x,
                        std::span<double> logits, std::span<double> pre,
                        std::span<double> hidden) {
  const std::size_t k_out = spec.num_classes;
  if (spec.kind == model_kind::logreg) {
    const Matrix& w = params.layer(0).matrix;
    const Matrix& b = params.layer(1).matrix;
    for (std::size_t k = 0; k < k_out; ++k) logits[k] = b[k];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double xj = x[j];
      for (std::size_t k = 0; k < k_out; ++k) logits[k] += xj * w(j, k);
    }
    return;
  }
  const Matrix& w1 = params.layer(0).matrix;
  const Matrix& b1 = params.layer(1).matrix;
  const Matrix& w2 = params.layer(2).matrix;
  const Matrix& b2 = params.layer(3).matrix;
  const std::size_t h_dim = spec.hidden_dim;
  for (std::size_t h = 0; h < h_dim; ++h) pre[h] = b1[h];
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double xj = x[j];
    for (std::size_t h = 0; h < h_dim; ++h) pre[h] += xj * w1(j, h);
  }
  for (std::size_t h = 0; h < h_dim; ++h) hidden[h] = act_fn(spec.act, pre[h]);
  for (std::size_t k = 0; k < k_out; ++k) logits[k] = b2[k];
  for (std::size_t h = 0; h < h_dim; ++h) {
    const double hv = hidden[h];
    for (std::size_t k = 0; k < k_out; ++k) logits[k] += hv * w2(h, k);
  }
}

/// Turns logits into softmax probabilities in place; returns -log p[label].
inline double softmax_xent(std::span<double> logits, int label) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  const double shifted_label = logits[static_cast<std::size_t>(label)] - mx;
  double sum = 0.0;
  for (auto& z : logits) {
    z = std::exp(z - mx);
    sum += z;
  }
  const double loss = std::log(sum) - shifted_label;
  for (auto& z : logits) z /= sum;
  return loss;
}

/// Mean cross-entropy over `indices`; writes the mean gradient into `grad`,
/// which must already be shape-compatible with `params`.
inline double batch_loss_grad(const ModelSpec& spec, const ParamSet& params, const Dataset& ds,
                              std::span<const std::size_t> indices, ParamSet& grad) {
  for (auto& layer : grad.layers()) {
    std::fill(layer.matrix.values().begin(), layer.matrix.values().end(), 0.0);
  }
  const std::size_t k_out = spec.num_classes;
  const std::size_t h_dim = spec.hidden_dim;
  std::vector<double> probs(k_out), pre(h_dim), hidden(h_dim), dhidden(h_dim);
  const double inv_b = 1.0 / static_cast<double>(indices.size());
  double total = 0.0;

  for (const std::size_t idx : indices) {
    const auto x = ds.features.row(idx);
    const int y = ds.labels[idx];
    forward_row(spec, params, x, probs, pre, hidden);
    total += softmax_xent(probs, y);
    // dL/dz = (p - onehot) / B
    probs[static_cast<std::size_t>(y)] -= 1.0;
    for (auto& v : probs) v *= inv_b;

    if (spec.kind == model_kind::logreg) {
      Matrix& gw = grad.layer(0).matrix;
      Matrix& gb = grad.layer(1).matrix;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double xj = x[j];
        for (std::size_t k = 0; k < k_out; ++k) gw(j, k) += xj * probs[k];
      }
      for (std::size_t k = 0; k < k_out; ++k) gb[k] += probs[k];
      continue;
    }

    const Matrix& w2 = params.layer(2).matrix;
    Matrix& gw1 = grad.layer(0).matrix;
    Matrix& gb1 = grad.layer(1).matrix;
    Matrix& gw2 = grad.layer(2).matrix;
    Matrix& gb2 = grad.layer(3).matrix;
    for (std::size_t h = 0; h < h_dim; ++h) {
      double acc = 0.0;
      const double hv = hidden[h];
      for (std::size_t k = 0; k < k_out; ++k) {
        gw2(h, k) += hv * probs[k];
        acc += probs[k] * w2(h, k);
      }
      dhidden[h] = acc * act_grad(spec.act, pre[h], hv);
    }
    for (std::size_t k = 0; k < k_out; ++k) gb2[k] += probs[k];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double xj = x[j];
      for (std::size_t h = 0; h < h_dim; ++h) gw1(j, h) += xj * dhidden[h];
    }
    for (std::size_t h = 0; h < h_dim; ++h) gb1[h] += dhidden[h];
  }
  return total * inv_b;
}

}  // namespace detail

struct LossGrad {
  double loss = 0.0;
  ParamSet grad;
};

/// Mean cross-entropy over the rows in `indices` and its exact gradient.
inline LossGrad loss_and_grad(const ModelSpec& spec, const ParamSet& params, const Dataset& ds,
                              std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("loss_and_grad: empty index list");
  detail::require_params_match(spec, params);
  for (auto i : indices) {
    if (i >= ds.size()) throw std::out_of_range("loss_and_grad: index out of range");
  }
  LossGrad out{0.0, zeros_like(params)};
  out.loss = detail::batch_loss_grad(spec, params, ds, indices, out.grad);
  return out;
}

struct LocalTrainResult {
  ParamSet params;
  /// Mean pre-step batch loss over the last local epoch, weighted by batch size.
  double last_epoch_loss = 0.0;
};

/// E epochs of plain mini-batch SGD over `shard`. Each epoch reshuffles the
/// shard with the seeded stream; the final short batch is kept.
inline LocalTrainResult local_train_with_stats(const ModelSpec& spec, const ParamSet& params,
                                               const Dataset& ds,
                                               std::span<const std::size_t> shard,
                                               const TrainConfig& cfg, std::uint64_t seed) {
  if (shard.empty()) throw std::invalid_argument("local_train: empty shard");
  cfg.validate();
  detail::require_params_match(spec, params);

  LocalTrainResult out{params, 0.0};
  ParamSet grad = zeros_like(params);
  std::vector<std::size_t> order(shard.begin(), shard.end());
  Rng rng(seed);

  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      epoch_loss += static_cast<double>(len) * detail::batch_loss_grad(spec, out.params, ds, batch, grad);
      for (std::size_t l = 0; l < out.params.num_layers(); ++l) {
        auto w = out.params.layer(l).matrix.values();
        const auto g = grad.layer(l).matrix.values();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * g[i];
      }
    }
    out.last_epoch_loss = epoch_loss / static_cast<double>(order.size());
  }
  return out;
}

inline ParamSet local_train(const ModelSpec& spec, const ParamSet& params, const Dataset& ds,
                            std::span<const std::size_t> shard, const TrainConfig& cfg,
                            std::uint64_t seed) {
  return local_train_with_stats(spec, params, ds, shard, cfg, seed).params;
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean loss and top-1 accuracy over the whole dataset; argmax ties go to
/// the lowest class index.
inline Evaluation evaluate(const ModelSpec& spec, const ParamSet& params, const Dataset& ds) {
  detail::require_params_match(spec, params);
  if (ds.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  std::vector<double> logits(spec.num_classes), pre(spec.hidden_dim), hidden(spec.hidden_dim);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    detail::forward_row(spec, params, ds.features.row(i), logits, pre, hidden);
    const auto best = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == ds.labels[i]) ++correct;
    loss += detail::softmax_xent(logits, ds.labels[i]);
  }
  const double n = static_cast<double>(ds.size());
  return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace fedsim
