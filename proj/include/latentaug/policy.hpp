// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <optional>
#include <vector>

#include "latentaug/transforms.hpp"

namespace latentaug {

/// Ordered pair of transforms applied first-then-second.
struct Policy {
  TransformKind first;
  TransformKind second;
  friend bool operator==(const Policy&, const Policy&) = default;
};

inline constexpr std::size_t kPolicyCount = kTransformCount * kTransformCount;
inline constexpr int kMagnitudeBins = 10;

/// All 256 ordered pairs; index = 16 * first_id + second_id.
class PolicySet {
 public:
  PolicySet();

  std::size_t size() const { return policies_.size(); }
  const Policy& operator[](std::size_t index) const { return policies_.at(index); }
  static std::size_t index_of(const Policy& p) {
    return static_cast<std::size_t>(p.first) * kTransformCount + static_cast<std::size_t>(p.second);
  }

  auto begin() const { return policies_.begin(); }
  auto end() const { return policies_.end(); }

 private:
  std::vector<Policy> policies_;
};

PolicySet build_policy_set();

/// K distinct policy indices drawn without replacement.
struct SubsetDraw {
  std::vector<std::size_t> indices;
  std::size_t size() const { return indices.size(); }
};

/// Uniform over K-subsets of [0, S); order is the draw order.
SubsetDraw sample_subset(std::size_t set_size, std::size_t subset_size, Rng& rng);

struct PolicyOutput {
  Image image;
  SoftLabel label;
};

/// Magnitude level of bin b in {0..9}.
inline double bin_level(int bin) { return static_cast<double>(bin) / (kMagnitudeBins - 1); }

/// Draws a magnitude bin per transform and applies first then second. With
/// `mix_labels` false a Mixup step leaves the label untouched.
PolicyOutput apply_policy(const Image& img, const SoftLabel& label, const Policy& policy, Rng& rng,
                          std::optional<MixPartner> partner = std::nullopt, bool mix_labels = true);

/// Same as apply_policy with the two levels fixed by the caller.
PolicyOutput apply_policy_at(const Image& img, const SoftLabel& label, const Policy& policy,
                             double first_level, double second_level, Rng& rng,
                             std::optional<MixPartner> partner = std::nullopt, bool mix_labels = true);

inline constexpr double kPiFloor = 1e-8;

/// Unconditional policy probabilities with the moving-average window.
struct PiState {
  Eigen::VectorXd pi;
  std::deque<Eigen::VectorXd> buffer;
  std::size_t window = 10;

  std::size_t size() const { return static_cast<std::size_t>(pi.size()); }
  Eigen::VectorXd gather(const SubsetDraw& subset) const;
};

PiState init_pi(std::size_t set_size, std::size_t window);

/// Pushes the batch-mean softmin weights (zero outside the subset) and
/// recomputes pi = normalize(max(window mean, floor)).
void update_pi(PiState& state, const Eigen::Ref<const Eigen::VectorXd>& batch_mean_h_tilde,
               const SubsetDraw& subset);

/// Shannon entropy in nats.
double entropy(const Eigen::VectorXd& pi);

// Snapshot: one decimal probability per line, 17 significant digits.
void save_pi(const std::filesystem::path& path, const Eigen::VectorXd& pi);
Eigen::VectorXd load_pi(const std::filesystem::path& path);

}  // namespace latentaug
