// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace latentaug::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// h, h~ and pi sum to 1 and stay non-negative on fuzzed inputs.
CheckResult normalization_fuzz(std::size_t trials = 10000, std::uint64_t seed = 1);

/// Gradient of the expected loss at sigma = 1e-8 against a finite-difference
/// gradient of the max-view objective.
CheckResult hardest_view_limit(std::size_t trials = 20, std::uint64_t seed = 2);

/// Gradient of the expected loss at sigma = 1e8 against a finite-difference
/// gradient of the view-average objective.
CheckResult view_average_limit(std::size_t trials = 20, std::uint64_t seed = 3);

/// Constant-delta weighted expected loss against the full-set expected loss.
CheckResult subset_weighting_identity(std::size_t instances = 100, std::uint64_t seed = 4);

/// Backprop gradient against central differences on random architectures.
CheckResult finite_difference_gradient(std::size_t architectures = 10, std::uint64_t seed = 5);

/// softmin_weights([0.1, 0.4], 1) against the closed form.
CheckResult softmin_scalar();

/// Fixture bytes written by write_loader_fixtures parse to the expected tensors,
/// and corrupted fixtures raise the matching errors.
CheckResult loader_golden(const std::filesystem::path& fixture_dir);

/// Two short runs with the same config produce identical metrics.csv bytes.
CheckResult run_determinism(const std::filesystem::path& scratch_dir);

/// Writes the hand-built IDX and CIFAR fixtures (valid and corrupted).
void write_loader_fixtures(const std::filesystem::path& dir);

/// Every check above; loader fixtures are generated under `scratch_dir`
/// when `fixture_dir` is empty.
std::vector<CheckResult> run_all(const std::filesystem::path& fixture_dir, const std::filesystem::path& scratch_dir);

}  // namespace latentaug::checks
