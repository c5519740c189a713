// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "latentaug/data.hpp"
#include "latentaug/nn.hpp"
#include "latentaug/policy.hpp"

namespace latentaug {

/// How the per-view weights are formed from h.
enum class WeightMode {
  Latent,        // softmin of h with inverse scale sigma
  UbsLimit,      // sigma -> 0: equal split over the minimizers of h
  UniformLimit,  // sigma -> infinity: 1/K everywhere
};

enum class FinalOp { None, Cutout };

/// Likelihoods below exp(-30) are floored before forming h.
inline constexpr double kLogLikelihoodFloor = -30.0;

/// h_z = pi_z p_z / sum_k pi_k p_k over the subset, via log-sum-exp.
Eigen::VectorXd cond_prob(const Eigen::VectorXd& pi_subset, const Eigen::VectorXd& likelihood);
Eigen::VectorXd cond_prob_log(const Eigen::VectorXd& log_pi_subset, const Eigen::VectorXd& log_likelihood);

/// exp(-h_z / sigma) / sum_k exp(-h_k / sigma), max-shifted. sigma must be finite and > 0.
Eigen::VectorXd softmin_weights(const Eigen::VectorXd& h, double sigma);

/// Closed-form sigma -> 0 / sigma -> infinity limits of softmin_weights.
Eigen::VectorXd limit_weights(const Eigen::VectorXd& h, WeightMode mode);

/// Per-view log-likelihoods log P(y | o_z(x), theta): one row per sample, one
/// column per policy of the subset.
struct ViewBatch {
  Eigen::MatrixXd log_likelihood;
  SubsetDraw subset;

  Eigen::Index batch_size() const { return log_likelihood.rows(); }
  Eigen::Index views() const { return log_likelihood.cols(); }
  /// Per-view losses -log P.
  Eigen::MatrixXd losses() const { return -log_likelihood; }
};

struct LatentWeights {
  Eigen::MatrixXd h;        // B x K
  Eigen::MatrixXd h_tilde;  // B x K
  double sigma = 1.0;
};

struct EmConfig {
  std::size_t subset_size = 6;
  /// Inverse scale; 0 and +infinity route to the limit modes.
  double sigma = 1.0;
  WeightMode mode = WeightMode::Latent;
  bool fixed_pi = false;
  double weight_decay = 0.0;
  FinalOp final_op = FinalOp::None;
  double cutout_frac = 0.5;
  /// Mixup mixes labels (true) or keeps the original label (false).
  bool mix_labels = true;
  std::optional<ChannelStats> standardization;

  void validate() const;
};

/// Mode after routing sigma = 0 / sigma = infinity to the limits.
WeightMode effective_mode(const EmConfig& cfg);

LatentWeights latent_weights(const ViewBatch& views, const Eigen::VectorXd& log_pi_subset, const EmConfig& cfg);

/// -(1/B) sum_b sum_z h~_bz (log pi_z + log P_bz) with the weights held fixed.
double expected_loss(const ViewBatch& views, const LatentWeights& weights, const Eigen::VectorXd& log_pi_subset);

/// -(1/B) sum_b log sum_z pi_z P_bz.
double marginal_loss(const ViewBatch& views, const Eigen::VectorXd& pi_subset);

/// Full-set expected loss of one sample: h from the reference likelihoods
/// (theta^(t)), loss terms from the evaluated likelihoods (theta).
double expected_loss_full(const Eigen::VectorXd& pi, const Eigen::VectorXd& log_likelihood_ref,
                          const Eigen::VectorXd& log_likelihood);

/// Draw-probability weighted form: -sum_z delta_z h^delta_z log(pi_z P_z) with
/// h^delta_z = pi_z P^ref_z / sum_k delta_k pi_k P^ref_k.
double expected_loss_delta(const Eigen::VectorXd& delta, const Eigen::VectorXd& pi,
                           const Eigen::VectorXd& log_likelihood_ref, const Eigen::VectorXd& log_likelihood);

/// Batch mean of the per-sample maximum view loss (B x K losses).
double ubs_objective(const Eigen::MatrixXd& losses);
/// Batch mean of the per-sample average view loss.
double advaa_objective(const Eigen::MatrixXd& losses);

/// Augmented views of a mini-batch, sample-major (index = b * K + k).
struct AugmentedViews {
  std::vector<Image> images;
  Eigen::MatrixXd labels;  // classes x (B*K)
};

/// Applies every policy of `subset` to every sample, then the final op. Sample b
/// uses the stream derive_rng(seed, {b}); its Mixup partner is a uniformly
/// chosen other sample of the batch.
AugmentedViews augment_views(std::span<const Image> images, std::span<const SoftLabel> labels,
                             const PolicySet& policies, const SubsetDraw& subset, const EmConfig& cfg,
                             std::uint64_t seed);

/// Final op applied after augmentation (cutout or nothing).
Image apply_final_op(const Image& img, const EmConfig& cfg, Rng& rng);

struct StepMetrics {
  std::size_t iteration = 0;
  double expected_loss = 0.0;
  double marginal_loss = 0.0;
  double lr = 0.0;
  double pi_entropy = 0.0;
  /// Up to five (policy index, batch-mean h~) pairs, largest first.
  std::vector<std::pair<std::size_t, double>> top_policies;
};

/// Expected/marginal loss, weights and theta-gradient for one set of views.
template <typename Scalar>
struct LatentObjective {
  ViewBatch views;
  LatentWeights weights;
  double expected_loss = 0.0;
  double marginal_loss = 0.0;
  nn::Gradient<Scalar> grad;
};

/// E-step and gradient of the h~-weighted loss with h~ frozen. The log pi term
/// carries no theta-gradient and is left out of `grad`.
template <typename Scalar>
LatentObjective<Scalar> latent_objective(const nn::ModelParams<Scalar>& params, const nn::Matrix<Scalar>& inputs,
                                         const Eigen::MatrixXd& labels, const SubsetDraw& subset,
                                         const Eigen::VectorXd& pi_subset, const EmConfig& cfg) {
  const auto k = static_cast<Eigen::Index>(subset.size());
  if (k == 0 || inputs.cols() % k != 0) throw DimensionError("latent_objective: views not a multiple of K");
  if (pi_subset.size() != k) throw DimensionError("latent_objective: pi subset length mismatch");
  const Eigen::Index batch = inputs.cols() / k;

  auto pass = nn::forward(params, inputs);
  const Eigen::VectorXd ll = nn::soft_log_likelihood(pass.log_proba, labels);
  LatentObjective<Scalar> out;
  out.views.subset = subset;
  out.views.log_likelihood = ll.reshaped(k, batch).transpose();
  if (!out.views.log_likelihood.allFinite()) throw NumericalError("latent_objective: non-finite likelihood");

  const Eigen::VectorXd log_pi = pi_subset.array().log().matrix();
  out.weights = latent_weights(out.views, log_pi, cfg);
  out.expected_loss = expected_loss(out.views, out.weights, log_pi);
  out.marginal_loss = marginal_loss(out.views, pi_subset);

  Eigen::VectorXd w = out.weights.h_tilde.transpose().reshaped() / static_cast<double>(batch);
  out.grad = nn::backward(params, pass, nn::weighted_ce_dlogits(pass.log_proba, labels, w));
  return out;
}

/// One latent-augmentation iteration: draw the subset, augment, E-step, SGD on theta
/// with h~ frozen, then the moving-average pi update (unless pi is fixed).
template <typename Scalar>
StepMetrics em_step(nn::ModelParams<Scalar>& params, std::span<const Image> images,
                    std::span<const SoftLabel> labels, PiState& pi, const PolicySet& policies,
                    const EmConfig& cfg, Rng& rng, double lr) {
  if (images.empty()) throw DomainError("em_step: empty batch");
  if (images.size() != labels.size()) throw DimensionError("em_step: images and labels differ in count");
  if (pi.size() != policies.size()) throw DimensionError("em_step: pi and policy set sizes differ");
  const std::uint64_t view_seed = rng();
  const SubsetDraw subset = sample_subset(policies.size(), cfg.subset_size, rng);
  const auto views = augment_views(images, labels, policies, subset, cfg, view_seed);
  const auto inputs = to_model_input<Scalar>(views.images, cfg.standardization);

  const Eigen::VectorXd pi_subset = pi.gather(subset);
  auto objective = latent_objective(params, inputs, views.labels, subset, pi_subset, cfg);
  nn::sgd_update(params, objective.grad, lr, cfg.weight_decay);

  const Eigen::VectorXd mean_h_tilde = objective.weights.h_tilde.colwise().mean().transpose();
  if (!cfg.fixed_pi) update_pi(pi, mean_h_tilde / mean_h_tilde.sum(), subset);

  StepMetrics m;
  m.expected_loss = objective.expected_loss;
  m.marginal_loss = objective.marginal_loss;
  m.lr = lr;
  m.pi_entropy = entropy(pi.pi);
  std::vector<std::pair<std::size_t, double>> ranked;
  for (Eigen::Index z = 0; z < mean_h_tilde.size(); ++z) ranked.emplace_back(subset.indices[static_cast<std::size_t>(z)], mean_h_tilde[z]);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  ranked.resize(std::min<std::size_t>(ranked.size(), 5));
  m.top_policies = std::move(ranked);
  return m;
}

}  // namespace latentaug
