// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "latentaug/errors.hpp"
#include "latentaug/rng.hpp"

namespace latentaug::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Dense ReLU network: input -> hidden... -> classes. No hidden layers gives
/// softmax regression.
struct Architecture {
  Eigen::Index input_dim = 0;
  std::vector<Eigen::Index> hidden;
  Eigen::Index classes = 0;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

template <typename Scalar>
struct Dense {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;    // out
};

/// Weights of the classifier. Also used as the gradient container since both
/// share one shape.
template <typename Scalar>
struct ModelParams {
  Architecture arch;
  std::vector<Dense<Scalar>> layers;

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  ModelParams zeros_like() const {
    ModelParams out{arch, {}};
    for (const auto& l : layers)
      out.layers.push_back({Matrix<Scalar>::Zero(l.weight.rows(), l.weight.cols()), Vector<Scalar>::Zero(l.bias.size())});
    return out;
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  template <typename Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> out{arch, {}};
    for (const auto& l : layers) out.layers.push_back({l.weight.template cast<Other>(), l.bias.template cast<Other>()});
    return out;
  }
};

template <typename Scalar>
using Gradient = ModelParams<Scalar>;

/// Zero-initialized parameters with the given architecture.
template <typename Scalar>
ModelParams<Scalar> zero_model(const Architecture& arch) {
  if (arch.input_dim < 1 || arch.classes < 1) throw DimensionError("zero_model: empty architecture");
  ModelParams<Scalar> p{arch, {}};
  Eigen::Index in = arch.input_dim;
  auto add = [&](Eigen::Index out) {
    if (out < 1) throw DimensionError("zero_model: layer width must be positive");
    p.layers.push_back({Matrix<Scalar>::Zero(out, in), Vector<Scalar>::Zero(out)});
    in = out;
  };
  for (auto h : arch.hidden) add(h);
  add(arch.classes);
  return p;
}

/// He-normal weights, zero biases.
template <typename Scalar>
ModelParams<Scalar> init_model(const Architecture& arch, Rng& rng) {
  auto p = zero_model<Scalar>(arch);
  for (auto& l : p.layers) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(l.weight.cols())));
    for (Eigen::Index j = 0; j < l.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < l.weight.rows(); ++i) l.weight(i, j) = static_cast<Scalar>(normal(rng));
  }
  return p;
}

/// Cached activations of one forward pass over column-stacked samples.
template <typename Scalar>
struct ForwardPass {
  std::vector<Matrix<Scalar>> inputs;  // input to each layer
  Matrix<Scalar> log_proba;            // classes x samples
};

/// Column-wise log-softmax.
template <typename Scalar>
Matrix<Scalar> log_softmax(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Scalar m = logits.col(j).maxCoeff();
    const Scalar lse = m + std::log((logits.col(j).array() - m).exp().sum());
    out.col(j) = logits.col(j).array() - lse;
  }
  return out;
}

template <typename Scalar>
ForwardPass<Scalar> forward(const ModelParams<Scalar>& params, const Matrix<Scalar>& x) {
  if (x.rows() != params.arch.input_dim) throw DimensionError("forward: input dimension mismatch");
  ForwardPass<Scalar> pass;
  pass.inputs.reserve(params.layers.size());
  Matrix<Scalar> a = x;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    Matrix<Scalar> z = l.weight * a;
    z.colwise() += l.bias;
    pass.inputs.push_back(std::move(a));
    if (i + 1 < params.layers.size()) {
      a = z.cwiseMax(Scalar(0));
    } else {
      pass.log_proba = log_softmax<Scalar>(z);
    }
  }
  return pass;
}

/// Per-sample log-probabilities (classes x samples).
template <typename Scalar>
Matrix<Scalar> predict_log_proba(const ModelParams<Scalar>& params, const Matrix<Scalar>& x) {
  return forward(params, x).log_proba;
}

/// Reverse accumulation from d(loss)/d(logits).
template <typename Scalar>
Gradient<Scalar> backward(const ModelParams<Scalar>& params, const ForwardPass<Scalar>& pass,
                          Matrix<Scalar> dlogits) {
  Gradient<Scalar> grad = params.zeros_like();
  Matrix<Scalar> delta = std::move(dlogits);
  for (std::size_t i = params.layers.size(); i-- > 0;) {
    const auto& in = pass.inputs[i];
    grad.layers[i].weight.noalias() = delta * in.transpose();
    grad.layers[i].bias = delta.rowwise().sum();
    if (i > 0) {
      Matrix<Scalar> back = params.layers[i].weight.transpose() * delta;
      // ReLU mask: the stored input is the post-activation of layer i-1.
      delta = (in.array() > Scalar(0)).select(back, Scalar(0));
    }
  }
  return grad;
}

/// Log-likelihood of each soft label: sum_c label_c * log p_c (one value per column).
template <typename Scalar>
Eigen::VectorXd soft_log_likelihood(const Matrix<Scalar>& log_proba, const Eigen::MatrixXd& labels) {
  if (log_proba.rows() != labels.rows() || log_proba.cols() != labels.cols())
    throw DimensionError("soft_log_likelihood: label shape mismatch");
  return (labels.array() * log_proba.template cast<double>().array()).colwise().sum().transpose();
}

template <typename Scalar>
struct LossAndGrad {
  double loss = 0.0;
  Gradient<Scalar> grad;
};

/// d(-sum_v w_v sum_c y_cv log p_cv)/d(logits) for column weights w.
template <typename Scalar>
Matrix<Scalar> weighted_ce_dlogits(const Matrix<Scalar>& log_proba, const Eigen::MatrixXd& labels,
                                   const Eigen::VectorXd& weights) {
  const Eigen::ArrayXd label_mass = labels.colwise().sum().transpose().array();
  Eigen::MatrixXd d = log_proba.template cast<double>().array().exp().matrix();
  d = d * label_mass.matrix().asDiagonal();
  d -= labels;
  d = d * weights.asDiagonal();
  return d.template cast<Scalar>();
}

/// Column-weighted soft-label cross-entropy over column-stacked views:
/// loss = -sum_v w_v sum_c label_cv log p_cv. Reductions accumulate in double.
template <typename Scalar>
LossAndGrad<Scalar> weighted_loss_and_grad(const ModelParams<Scalar>& params, const Matrix<Scalar>& inputs,
                                           const Eigen::MatrixXd& labels, const Eigen::VectorXd& weights) {
  if (inputs.cols() != labels.cols() || weights.size() != inputs.cols())
    throw DimensionError("weighted_loss_and_grad: view count mismatch");
  if (labels.rows() != params.arch.classes) throw DimensionError("weighted_loss_and_grad: label width mismatch");
  auto pass = forward(params, inputs);
  const Eigen::VectorXd ll = soft_log_likelihood(pass.log_proba, labels);
  const double loss = -weights.dot(ll);
  if (!std::isfinite(loss)) throw NumericalError("weighted_loss_and_grad: non-finite loss");
  auto grad = backward(params, pass, weighted_ce_dlogits(pass.log_proba, labels, weights));
  return {loss, std::move(grad)};
}

/// Per-sample form: views are sample-major (column = b * K + z) and
/// `h_tilde` is B x K; the loss is averaged over the B samples.
template <typename Scalar>
LossAndGrad<Scalar> weighted_loss_and_grad(const ModelParams<Scalar>& params, const Matrix<Scalar>& inputs,
                                           const Eigen::MatrixXd& labels, const Eigen::MatrixXd& h_tilde) {
  const Eigen::Index batch = h_tilde.rows();
  const Eigen::Index views = h_tilde.cols();
  if (batch * views != inputs.cols()) throw DimensionError("weighted_loss_and_grad: B*K != view count");
  Eigen::VectorXd w(batch * views);
  for (Eigen::Index b = 0; b < batch; ++b)
    for (Eigen::Index z = 0; z < views; ++z) w[b * views + z] = h_tilde(b, z) / static_cast<double>(batch);
  return weighted_loss_and_grad(params, inputs, labels, w);
}

/// theta <- theta - lr * (grad + weight_decay * theta)
template <typename Scalar>
void sgd_update(ModelParams<Scalar>& params, const Gradient<Scalar>& grad, double lr, double weight_decay) {
  if (lr < 0.0) throw DomainError("sgd_update: negative learning rate");
  if (grad.layers.size() != params.layers.size()) throw DimensionError("sgd_update: gradient shape mismatch");
  const auto step = static_cast<Scalar>(lr);
  const auto decay = static_cast<Scalar>(weight_decay);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& p = params.layers[i];
    const auto& g = grad.layers[i];
    if (g.weight.rows() != p.weight.rows() || g.weight.cols() != p.weight.cols() || g.bias.size() != p.bias.size())
      throw DimensionError("sgd_update: gradient shape mismatch");
    p.weight -= step * (g.weight + decay * p.weight);
    p.bias -= step * (g.bias + decay * p.bias);
  }
}

// Flat parameter views, layer order, weights column-major then bias.
template <typename Scalar>
Vector<Scalar> flatten(const ModelParams<Scalar>& params) {
  Vector<Scalar> out(params.parameter_count());
  Eigen::Index at = 0;
  for (const auto& l : params.layers) {
    out.segment(at, l.weight.size()) = l.weight.reshaped();
    at += l.weight.size();
    out.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return out;
}

template <typename Scalar>
void assign_flat(ModelParams<Scalar>& params, const Vector<Scalar>& flat) {
  if (flat.size() != params.parameter_count()) throw DimensionError("assign_flat: length mismatch");
  Eigen::Index at = 0;
  for (auto& l : params.layers) {
    l.weight.reshaped() = flat.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  }
}

struct LrSchedule {
  double lr0 = 0.1;
  std::size_t total_steps = 1;
};

/// Single-cycle cosine annealing from lr0 to 0.
inline double cosine_lr(std::size_t step, const LrSchedule& schedule) {
  if (!(schedule.lr0 > 0.0)) throw DomainError("cosine_lr: lr0 must be positive");
  if (schedule.total_steps == 0 || step > schedule.total_steps) throw DomainError("cosine_lr: step out of range");
  const double frac = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  return schedule.lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

// Checkpoint file: "LANN", u32 version, u32 layer count, (u32 rows, u32 cols)
// per layer, then little-endian f64 values: each layer's weight row-major
// followed by its bias.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ModelParams<double>& params);
ModelParams<double> load_checkpoint(const std::filesystem::path& path);

}  // namespace latentaug::nn
