// SPDX-License-Identifier: Apache-2.0
#include "latentaug/policy.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>

#include "latentaug/io.hpp"

namespace latentaug {

PolicySet::PolicySet() {
  policies_.reserve(kPolicyCount);
  for (int a = 0; a < kTransformCount; ++a)
    for (int b = 0; b < kTransformCount; ++b) policies_.push_back({transform_from_id(a), transform_from_id(b)});
}

PolicySet build_policy_set() { return PolicySet{}; }

SubsetDraw sample_subset(std::size_t set_size, std::size_t subset_size, Rng& rng) {
  if (subset_size < 1 || subset_size > set_size) throw DomainError("sample_subset: need 1 <= K <= S");
  std::vector<std::size_t> pool(set_size);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates: the first K slots are a uniform K-subset.
  for (std::size_t i = 0; i < subset_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, set_size - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(subset_size);
  return SubsetDraw{std::move(pool)};
}

PolicyOutput apply_policy_at(const Image& img, const SoftLabel& label, const Policy& policy,
                             double first_level, double second_level, Rng& rng,
                             std::optional<MixPartner> partner, bool mix_labels) {
  PolicyOutput out{img, label};
  const auto step = [&](TransformKind kind, double level) {
    auto r = apply_transform(out.image, kind, level, rng,
                             kind == TransformKind::Mixup ? partner : std::nullopt);
    out.image = std::move(r.image);
    if (kind == TransformKind::Mixup && mix_labels) {
      if (partner->label == nullptr || partner->label->size() != out.label.size())
        throw DimensionError("apply_policy: partner label length differs");
      out.label = (1.0 - r.mix_weight) * out.label + r.mix_weight * *partner->label;
    }
  };
  step(policy.first, first_level);
  step(policy.second, second_level);
  return out;
}

PolicyOutput apply_policy(const Image& img, const SoftLabel& label, const Policy& policy, Rng& rng,
                          std::optional<MixPartner> partner, bool mix_labels) {
  const int first_bin = uniform_int(rng, 0, kMagnitudeBins - 1);
  const int second_bin = uniform_int(rng, 0, kMagnitudeBins - 1);
  return apply_policy_at(img, label, policy, bin_level(first_bin), bin_level(second_bin), rng, partner,
                         mix_labels);
}

Eigen::VectorXd PiState::gather(const SubsetDraw& subset) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(subset.size()));
  for (std::size_t k = 0; k < subset.size(); ++k) out[static_cast<Eigen::Index>(k)] = pi[static_cast<Eigen::Index>(subset.indices[k])];
  return out;
}

PiState init_pi(std::size_t set_size, std::size_t window) {
  if (set_size < 1) throw DomainError("init_pi: S must be positive");
  if (window < 1) throw DomainError("init_pi: window must be positive");
  PiState state;
  state.pi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(set_size), 1.0 / static_cast<double>(set_size));
  state.window = window;
  return state;
}

void update_pi(PiState& state, const Eigen::Ref<const Eigen::VectorXd>& batch_mean_h_tilde,
               const SubsetDraw& subset) {
  if (static_cast<std::size_t>(batch_mean_h_tilde.size()) != subset.size())
    throw DimensionError("update_pi: weight vector and subset lengths differ");
  if ((batch_mean_h_tilde.array() < 0.0).any() || std::abs(batch_mean_h_tilde.sum() - 1.0) > 1e-6)
    throw DomainError("update_pi: weights must be non-negative and sum to one");

  Eigen::VectorXd raw = Eigen::VectorXd::Zero(state.pi.size());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const auto z = subset.indices[k];
    if (z >= state.size()) throw RangeError("update_pi: policy index out of range");
    raw[static_cast<Eigen::Index>(z)] = batch_mean_h_tilde[static_cast<Eigen::Index>(k)];
  }
  state.buffer.push_back(std::move(raw));
  while (state.buffer.size() > state.window) state.buffer.pop_front();

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(state.pi.size());
  for (const auto& r : state.buffer) mean += r;
  mean /= static_cast<double>(state.buffer.size());
  mean = mean.cwiseMax(kPiFloor);
  state.pi = mean / mean.sum();
}

double entropy(const Eigen::VectorXd& pi) {
  double h = 0.0;
  for (double p : pi) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

void save_pi(const std::filesystem::path& path, const Eigen::VectorXd& pi) {
  std::string text;
  char buf[64];
  for (double p : pi) {
    std::snprintf(buf, sizeof buf, "%.17g\n", p);
    text += buf;
  }
  write_file_atomic(path, text);
}

Eigen::VectorXd load_pi(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      values.push_back(std::stod(line, &used));
      if (used != line.size()) throw FormatError("load_pi: trailing characters in " + path.string());
    } catch (const std::logic_error&) {
      throw FormatError("load_pi: malformed line in " + path.string());
    }
  }
  if (values.empty()) throw FormatError("load_pi: empty snapshot " + path.string());
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace latentaug
