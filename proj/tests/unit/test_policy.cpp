// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "latentaug/policy.hpp"
#include "test_util.hpp"

using namespace latentaug;

TEST_CASE("policy set layout") {
  const PolicySet set = build_policy_set();
  CHECK(set.size() == 256);
  CHECK(set[0] == Policy{TransformKind::AutoContrast, TransformKind::AutoContrast});
  CHECK(set[147] == Policy{TransformKind::Rotate, TransformKind::Contrast});
  CHECK(PolicySet::index_of({TransformKind::Rotate, TransformKind::Contrast}) == 147);
  for (std::size_t i = 0; i < set.size(); ++i) CHECK(PolicySet::index_of(set[i]) == i);
  CHECK_THROWS(set[256]);
}

TEST_CASE("apply_policy examples") {
  Rng data_rng(1);
  const Image img = test::quantized_image(12, 12, 3, data_rng);
  const SoftLabel y = one_hot(5, 2);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    const auto inv = apply_policy(img, y, {TransformKind::Invert, TransformKind::Invert}, rng);
    CHECK(test::max_abs_diff(inv.image, img) <= 1e-6f);
    CHECK(inv.label == y);
  }
  Rng r0(3), r1(4);
  CHECK(apply_policy(img, y, {TransformKind::AutoContrast, TransformKind::Equalize}, r0).image ==
        apply_policy(img, y, {TransformKind::AutoContrast, TransformKind::Equalize}, r1).image);
  Rng r2(5);
  CHECK(apply_policy_at(img, y, {TransformKind::Brightness, TransformKind::Brightness}, 0.0, 0.0, r2).image == img);
}

TEST_CASE("magnitude bins map to b/9") {
  CHECK(bin_level(0) == 0.0);
  CHECK(bin_level(9) == 1.0);
  CHECK(bin_level(3) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("apply_policy mixes labels for Mixup") {
  const Image a(4, 4, 1, 0.0f), b(4, 4, 1, 1.0f);
  const SoftLabel ya = one_hot(3, 0), yb = one_hot(3, 1);
  Rng rng(6);
  const auto mixed = apply_policy_at(a, ya, {TransformKind::Mixup, TransformKind::Invert}, 1.0, 0.0, rng,
                                     MixPartner{&b, &yb});
  CHECK(mixed.label[0] == doctest::Approx(0.6));
  CHECK(mixed.label[1] == doctest::Approx(0.4));
  CHECK(std::abs(mixed.label.sum() - 1.0) <= 1e-6);
  Rng rng2(6);
  const auto kept = apply_policy_at(a, ya, {TransformKind::Mixup, TransformKind::Invert}, 1.0, 0.0, rng2,
                                    MixPartner{&b, &yb}, false);
  CHECK(kept.label == ya);
  Rng rng3(7);
  CHECK_THROWS_AS(apply_policy(a, ya, {TransformKind::Mixup, TransformKind::Invert}, rng3), MissingPartnerError);
}

TEST_CASE("sample_subset examples") {
  Rng rng(8);
  auto full = sample_subset(256, 256, rng);
  std::sort(full.indices.begin(), full.indices.end());
  std::vector<std::size_t> expected(256);
  std::iota(expected.begin(), expected.end(), std::size_t{0});
  CHECK(full.indices == expected);
  CHECK_THROWS_AS(sample_subset(4, 5, rng), DomainError);
  CHECK_THROWS_AS(sample_subset(4, 0, rng), DomainError);

  for (int i = 0; i < 100; ++i) {
    const auto d = sample_subset(256, 6, rng);
    const std::set<std::size_t> unique(d.indices.begin(), d.indices.end());
    CHECK(unique.size() == 6);
    CHECK(*unique.rbegin() < 256);
  }
}

TEST_CASE("sample_subset frequencies") {
  constexpr int draws = 100000;
  Rng rng(9);
  std::array<int, 4> counts{};
  for (int i = 0; i < draws; ++i) ++counts[sample_subset(4, 1, rng).indices[0]];
  for (int c : counts) CHECK(std::abs(c / double(draws) - 0.25) <= 0.02);

  int hits = 0;
  for (int i = 0; i < draws; ++i) {
    const auto d = sample_subset(256, 6, rng);
    hits += std::count(d.indices.begin(), d.indices.end(), std::size_t{42});
  }
  CHECK(std::abs(hits / double(draws) - 6.0 / 256.0) <= 0.002);
}

TEST_CASE("sample_subset is reproducible") {
  Rng a(10), b(10);
  for (int i = 0; i < 50; ++i) CHECK(sample_subset(256, 6, a).indices == sample_subset(256, 6, b).indices);
}

TEST_CASE("init_pi examples") {
  const PiState s = init_pi(256, 10);
  CHECK((s.pi.array() == 1.0 / 256.0).all());
  CHECK(std::abs(s.pi.sum() - 1.0) <= 1e-12);
  CHECK(s.buffer.empty());
  CHECK(init_pi(1, 10).pi[0] == 1.0);
  CHECK_THROWS_AS(init_pi(0, 10), DomainError);
}

TEST_CASE("update_pi examples") {
  {
    PiState s = init_pi(8, 10);
    SubsetDraw all;
    for (std::size_t i = 0; i < 8; ++i) all.indices.push_back(7 - i);
    update_pi(s, Eigen::VectorXd::Constant(8, 1.0 / 8.0), all);
    CHECK((s.pi.array() - 1.0 / 8.0).abs().maxCoeff() <= 1e-15);
  }
  {
    // Hand evaluation: the mean buffer is [1, 0], floored to [1, eps], then normalized.
    PiState s = init_pi(2, 10);
    update_pi(s, Eigen::VectorXd::Ones(1), SubsetDraw{{0}});
    const double eps = 1e-8;
    CHECK(s.pi[0] == doctest::Approx(1.0 / (1.0 + eps)).epsilon(1e-15));
    CHECK(s.pi[1] == doctest::Approx(eps / (1.0 + eps)).epsilon(1e-12));
  }
  {
    PiState s = init_pi(4, 10);
    Rng rng(11);
    for (int i = 0; i < 11; ++i) {
      const auto d = sample_subset(4, 2, rng);
      update_pi(s, Eigen::Vector2d(0.5, 0.5), d);
    }
    CHECK(s.buffer.size() == 10);
  }
}

TEST_CASE("update_pi errors") {
  PiState s = init_pi(4, 10);
  CHECK_THROWS_AS(update_pi(s, Eigen::VectorXd::Ones(2) / 2.0, SubsetDraw{{0}}), DimensionError);
  CHECK_THROWS_AS(update_pi(s, Eigen::Vector2d(0.7, 0.7), SubsetDraw{{0, 1}}), DomainError);
  CHECK_THROWS_AS(update_pi(s, Eigen::Vector2d(1.5, -0.5), SubsetDraw{{0, 1}}), DomainError);
}

TEST_CASE("update_pi keeps pi normalized and floored under fuzzing") {
  Rng rng(12);
  for (int run = 0; run < 20; ++run) {
    PiState s = init_pi(256, static_cast<std::size_t>(uniform_int(rng, 1, 12)));
    for (int t = 0; t < 40; ++t) {
      const auto k = static_cast<std::size_t>(uniform_int(rng, 1, 10));
      const auto d = sample_subset(256, k, rng);
      Eigen::VectorXd w(static_cast<Eigen::Index>(k));
      for (auto& v : w) v = uniform01(rng);
      w /= w.sum();
      update_pi(s, w, d);
      CHECK(std::abs(s.pi.sum() - 1.0) <= 1e-9);
      // normalize(max(mean, eps)) leaves the smallest entry at eps / sum >= eps / (1 + S eps).
      CHECK(s.pi.minCoeff() >= 1e-8 / (1.0 + 256 * 1e-8) * (1.0 - 1e-12));
      CHECK(s.buffer.size() <= s.window);
    }
  }
}

TEST_CASE("update_pi is invariant to consistent subset reordering") {
  PiState a = init_pi(16, 3), b = init_pi(16, 3);
  update_pi(a, Eigen::Vector3d(0.2, 0.3, 0.5), SubsetDraw{{4, 9, 1}});
  update_pi(b, Eigen::Vector3d(0.5, 0.2, 0.3), SubsetDraw{{1, 4, 9}});
  CHECK(a.pi == b.pi);
}

TEST_CASE("window of one reproduces the pushed vector") {
  PiState s = init_pi(4, 1);
  update_pi(s, Eigen::Vector4d(0.1, 0.2, 0.3, 0.4), SubsetDraw{{0, 1, 2, 3}});
  update_pi(s, Eigen::Vector4d(0.4, 0.3, 0.2, 0.1), SubsetDraw{{0, 1, 2, 3}});
  CHECK(s.pi == Eigen::Vector4d(0.4, 0.3, 0.2, 0.1));
}

TEST_CASE("cold start averages the pushes seen so far") {
  PiState s = init_pi(2, 10);
  update_pi(s, Eigen::Vector2d(1.0, 0.0), SubsetDraw{{0, 1}});
  update_pi(s, Eigen::Vector2d(0.0, 1.0), SubsetDraw{{0, 1}});
  CHECK(s.pi[0] == doctest::Approx(0.5));
}

TEST_CASE("entropy") {
  CHECK(entropy(init_pi(256, 10).pi) == doctest::Approx(std::log(256.0)));
  CHECK(entropy(Eigen::Vector2d(1.0, 0.0)) == 0.0);
}

TEST_CASE("pi snapshot round trip") {
  const auto dir = std::filesystem::path(LATENTAUG_SCRATCH);
  std::filesystem::create_directories(dir);
  Rng rng(13);
  PiState s = init_pi(256, 10);
  for (int t = 0; t < 5; ++t) update_pi(s, Eigen::Vector2d(0.3, 0.7), sample_subset(256, 2, rng));
  save_pi(dir / "pi.txt", s.pi);
  const Eigen::VectorXd back = load_pi(dir / "pi.txt");
  CHECK(back == s.pi);
  std::ifstream in(dir / "pi.txt");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 256);
  CHECK_THROWS_AS(load_pi(dir / "missing.txt"), IoError);
}
