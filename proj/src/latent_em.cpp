// SPDX-License-Identifier: Apache-2.0
#include "latentaug/latent_em.hpp"

namespace latentaug {

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

void require_same_length(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) throw DimensionError(what);
}

}  // namespace

Eigen::VectorXd cond_prob_log(const Eigen::VectorXd& log_pi_subset, const Eigen::VectorXd& log_likelihood) {
  require_same_length(log_pi_subset.size(), log_likelihood.size(), "cond_prob: length mismatch");
  if (log_pi_subset.size() == 0) throw DimensionError("cond_prob: empty subset");
  const Eigen::VectorXd joint = log_pi_subset + log_likelihood;
  const double norm = log_sum_exp(joint);
  if (!std::isfinite(norm)) throw DegenerateLikelihoodError("cond_prob: zero total likelihood");
  return (joint.array() - norm).exp().matrix();
}

Eigen::VectorXd cond_prob(const Eigen::VectorXd& pi_subset, const Eigen::VectorXd& likelihood) {
  if ((pi_subset.array() < 0.0).any() || (likelihood.array() < 0.0).any())
    throw DomainError("cond_prob: negative probability");
  return cond_prob_log(pi_subset.array().log().matrix(), likelihood.array().log().matrix());
}

Eigen::VectorXd softmin_weights(const Eigen::VectorXd& h, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError("softmin_weights: sigma must be finite and positive; use limit_weights");
  if (!h.allFinite()) throw DomainError("softmin_weights: non-finite h");
  const double lo = h.minCoeff();
  Eigen::ArrayXd e = (-(h.array() - lo) / sigma).exp();
  return (e / e.sum()).matrix();
}

Eigen::VectorXd limit_weights(const Eigen::VectorXd& h, WeightMode mode) {
  const auto k = h.size();
  if (k == 0) throw DimensionError("limit_weights: empty vector");
  switch (mode) {
    case WeightMode::UniformLimit: return Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    case WeightMode::UbsLimit: {
      const double lo = h.minCoeff();
      Eigen::VectorXd out = (h.array() == lo).cast<double>().matrix();
      return out / out.sum();
    }
    case WeightMode::Latent: break;
  }
  throw DomainError("limit_weights: mode must be a limit mode");
}

void EmConfig::validate() const {
  if (subset_size < 1) throw ConfigError("K must be >= 1");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (!(cutout_frac >= 0.0 && cutout_frac <= 1.0)) throw ConfigError("cutout fraction must be in [0,1]");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
}

WeightMode effective_mode(const EmConfig& cfg) {
  if (cfg.mode != WeightMode::Latent) return cfg.mode;
  if (cfg.sigma == 0.0) return WeightMode::UbsLimit;
  if (std::isinf(cfg.sigma)) return WeightMode::UniformLimit;
  return WeightMode::Latent;
}

LatentWeights latent_weights(const ViewBatch& views, const Eigen::VectorXd& log_pi_subset, const EmConfig& cfg) {
  require_same_length(log_pi_subset.size(), views.views(), "latent_weights: pi subset length mismatch");
  const WeightMode mode = effective_mode(cfg);
  LatentWeights w;
  w.sigma = cfg.sigma;
  w.h.resize(views.batch_size(), views.views());
  w.h_tilde.resize(views.batch_size(), views.views());
  for (Eigen::Index b = 0; b < views.batch_size(); ++b) {
    const Eigen::VectorXd ll = views.log_likelihood.row(b).transpose().cwiseMax(kLogLikelihoodFloor);
    const Eigen::VectorXd h = cond_prob_log(log_pi_subset, ll);
    w.h.row(b) = h.transpose();
    w.h_tilde.row(b) = (mode == WeightMode::Latent ? softmin_weights(h, cfg.sigma) : limit_weights(h, mode)).transpose();
  }
  return w;
}

double expected_loss(const ViewBatch& views, const LatentWeights& weights, const Eigen::VectorXd& log_pi_subset) {
  require_same_length(log_pi_subset.size(), views.views(), "expected_loss: pi subset length mismatch");
  if (weights.h_tilde.rows() != views.batch_size() || weights.h_tilde.cols() != views.views())
    throw DimensionError("expected_loss: weight shape mismatch");
  const Eigen::MatrixXd terms = views.log_likelihood.rowwise() + log_pi_subset.transpose();
  if (!terms.allFinite()) throw NumericalError("expected_loss: non-finite log term");
  return -(weights.h_tilde.array() * terms.array()).sum() / static_cast<double>(views.batch_size());
}

double marginal_loss(const ViewBatch& views, const Eigen::VectorXd& pi_subset) {
  require_same_length(pi_subset.size(), views.views(), "marginal_loss: pi subset length mismatch");
  const Eigen::RowVectorXd log_pi = pi_subset.array().log().matrix().transpose();
  double total = 0.0;
  for (Eigen::Index b = 0; b < views.batch_size(); ++b) {
    total -= log_sum_exp((views.log_likelihood.row(b) + log_pi).transpose());
  }
  return total / static_cast<double>(views.batch_size());
}

double expected_loss_full(const Eigen::VectorXd& pi, const Eigen::VectorXd& log_likelihood_ref,
                          const Eigen::VectorXd& log_likelihood) {
  require_same_length(pi.size(), log_likelihood_ref.size(), "expected_loss_full: length mismatch");
  require_same_length(pi.size(), log_likelihood.size(), "expected_loss_full: length mismatch");
  const Eigen::VectorXd log_pi = pi.array().log().matrix();
  const Eigen::VectorXd h = cond_prob_log(log_pi, log_likelihood_ref);
  return -h.dot(log_pi + log_likelihood);
}

double expected_loss_delta(const Eigen::VectorXd& delta, const Eigen::VectorXd& pi,
                           const Eigen::VectorXd& log_likelihood_ref, const Eigen::VectorXd& log_likelihood) {
  require_same_length(delta.size(), pi.size(), "expected_loss_delta: length mismatch");
  require_same_length(pi.size(), log_likelihood_ref.size(), "expected_loss_delta: length mismatch");
  require_same_length(pi.size(), log_likelihood.size(), "expected_loss_delta: length mismatch");
  const Eigen::ArrayXd joint_ref = pi.array() * log_likelihood_ref.array().exp();
  const double denom = (delta.array() * joint_ref).sum();
  if (!(denom > 0.0)) throw DegenerateLikelihoodError("expected_loss_delta: zero total likelihood");
  const Eigen::ArrayXd h = joint_ref / denom;
  return -(delta.array() * h * (pi.array().log() + log_likelihood.array())).sum();
}

double ubs_objective(const Eigen::MatrixXd& losses) {
  if (losses.size() == 0) throw DimensionError("ubs_objective: empty loss matrix");
  return losses.rowwise().maxCoeff().mean();
}

double advaa_objective(const Eigen::MatrixXd& losses) {
  if (losses.size() == 0) throw DimensionError("advaa_objective: empty loss matrix");
  return losses.rowwise().mean().mean();
}

Image apply_final_op(const Image& img, const EmConfig& cfg, Rng& rng) {
  if (cfg.final_op == FinalOp::Cutout) return cutout(img, cfg.cutout_frac, rng);
  return img;
}

AugmentedViews augment_views(std::span<const Image> images, std::span<const SoftLabel> labels,
                             const PolicySet& policies, const SubsetDraw& subset, const EmConfig& cfg,
                             std::uint64_t seed) {
  if (images.size() != labels.size()) throw DimensionError("augment_views: images and labels differ in count");
  if (images.empty()) throw DomainError("augment_views: empty batch");
  const std::size_t batch = images.size();
  const std::size_t k = subset.size();
  const auto classes = labels.front().size();
  AugmentedViews out;
  out.images.reserve(batch * k);
  out.labels.resize(classes, static_cast<Eigen::Index>(batch * k));
  for (std::size_t b = 0; b < batch; ++b) {
    Rng rng = derive_rng(seed, {b});
    std::size_t partner = b;
    if (batch > 1) {
      partner = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(batch) - 2));
      if (partner >= b) ++partner;
    }
    const MixPartner mix{&images[partner], &labels[partner]};
    for (std::size_t j = 0; j < k; ++j) {
      auto view = apply_policy(images[b], labels[b], policies[subset.indices[j]], rng, mix, cfg.mix_labels);
      out.images.push_back(apply_final_op(view.image, cfg, rng));
      out.labels.col(static_cast<Eigen::Index>(b * k + j)) = view.label;
    }
  }
  return out;
}

}  // namespace latentaug
