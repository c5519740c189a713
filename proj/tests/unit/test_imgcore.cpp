// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "latentaug/transforms.hpp"
#include "test_util.hpp"

using namespace latentaug;
using latentaug::test::max_abs_diff;

namespace {

std::vector<TransformKind> all_kinds() {
  std::vector<TransformKind> out;
  for (int i = 0; i < kTransformCount; ++i) out.push_back(transform_from_id(i));
  return out;
}

}  // namespace

TEST_CASE("transform ids are stable") {
  CHECK(kTransformCount == 16);
  const char* names[] = {"AutoContrast", "Brightness", "Color",     "Contrast", "Cutout",  "Equalize",
                         "Invert",       "Mixup",      "Posterize", "Rotate",   "Sharpness", "ShearX",
                         "ShearY",       "Solarize",   "TranslateX", "TranslateY"};
  for (int i = 0; i < 16; ++i) {
    CHECK(static_cast<int>(transform_from_id(i)) == i);
    CHECK(to_string(transform_from_id(i)) == names[i]);
  }
  CHECK_THROWS_AS(transform_from_id(16), RangeError);
  CHECK_THROWS_AS(transform_from_id(-1), RangeError);
}

TEST_CASE("image shape validation and one-hot labels") {
  CHECK_THROWS_AS(Image(2, 2, 2), DimensionError);
  const Image img(3, 4, 3, 0.25f);
  CHECK(img.size() == 36);
  CHECK(img(2, 3, 2) == 0.25f);
  const SoftLabel y = one_hot(10, 3);
  CHECK(y.sum() == 1.0);
  CHECK(y[3] == 1.0);
  CHECK_THROWS_AS(one_hot(10, 10), RangeError);
}

TEST_CASE("invert maps 0.2 to 0.8 at any level") {
  Rng rng(1);
  const Image img(4, 4, 1, 0.2f);
  for (double level : {0.0, 0.4, 1.0}) {
    const auto out = apply_transform(img, TransformKind::Invert, level, rng);
    CHECK(out.image(1, 1, 0) == doctest::Approx(0.8f).epsilon(1e-6));
    CHECK(out.mix_weight == 0.0);
  }
}

TEST_CASE("neutral magnitudes are identities") {
  Rng data_rng(2);
  const Image img = test::quantized_image(16, 16, 3, data_rng);
  Rng rng(3);
  CHECK(apply_transform(img, TransformKind::Rotate, 0.0, rng).image == img);
  CHECK(apply_transform(img, TransformKind::Posterize, 0.0, rng).image == img);
  CHECK(apply_transform(img, TransformKind::Brightness, 0.0, rng).image == img);
  CHECK(ops::brightness(img, 1.0) == img);
  CHECK(ops::posterize(img, 8) == img);
  CHECK(apply_transform(img, TransformKind::Solarize, 0.0, rng).image == img);
  CHECK(apply_transform(img, TransformKind::ShearX, 0.0, rng).image == img);
  CHECK(apply_transform(img, TransformKind::TranslateY, 0.0, rng).image == img);
  CHECK(apply_transform(img, TransformKind::Cutout, 0.0, rng).image == img);
}

TEST_CASE("apply_transform errors") {
  Rng rng(4);
  const Image img(4, 4, 1, 0.3f);
  CHECK_THROWS_AS(apply_transform(img, TransformKind::Mixup, 0.5, rng), MissingPartnerError);
  CHECK_THROWS_AS(apply_transform(img, TransformKind::Rotate, std::nan(""), rng), DomainError);
  CHECK_THROWS_AS(apply_transform(img, TransformKind::Rotate, INFINITY, rng), DomainError);
  CHECK_THROWS_AS(apply_transform(img, TransformKind::Rotate, 1.5, rng), DomainError);
}

TEST_CASE("mixup examples") {
  const Image a(2, 2, 1, 0.0f), b(2, 2, 1, 1.0f);
  const SoftLabel ya = one_hot(10, 0), yb = one_hot(10, 1);

  const auto zero = mixup(a, ya, b, yb, 0.0);
  CHECK(zero.image == a);
  CHECK(zero.label == ya);

  const auto half = mixup(a, ya, b, yb, 0.5);
  CHECK(half.image(1, 1, 0) == 0.5f);

  const auto quarter = mixup(a, ya, b, yb, 0.25);
  CHECK(quarter.label[0] == doctest::Approx(0.75));
  CHECK(quarter.label[1] == doctest::Approx(0.25));
  CHECK(quarter.label.tail(8).isZero());
  CHECK(std::abs(quarter.label.sum() - 1.0) <= 1e-6);

  CHECK_THROWS_AS(mixup(a, ya, Image(3, 2, 1), yb, 0.2), DimensionError);
  CHECK_THROWS_AS(mixup(a, ya, b, yb, 0.6), DomainError);
}

TEST_CASE("mixup through apply_transform reports its weight") {
  Rng rng(5);
  const Image a(2, 2, 1, 0.0f), b(2, 2, 1, 1.0f);
  const SoftLabel yb = one_hot(3, 2);
  const auto out = apply_transform(a, TransformKind::Mixup, 1.0, rng, MixPartner{&b, &yb});
  CHECK(out.mix_weight == doctest::Approx(0.4));
  CHECK(out.image(0, 0, 0) == doctest::Approx(0.4f));
}

TEST_CASE("cutout examples") {
  Rng data_rng(6);
  const Image img = test::random_image(32, 32, 3, data_rng);
  Rng rng(7);
  CHECK(cutout(img, 0.0, rng) == img);

  const Image full = ops::cutout_at(img, 32, 16, 16);
  CHECK((full.array() == kFillValue).all());

  // Oracle: count pixels that differ from the input by direct scan.
  Image base(32, 32, 3, 0.0f);
  const Image patched = ops::cutout_at(base, static_cast<int>(std::ceil(0.5 * 32)), 16, 16);
  for (int c = 0; c < 3; ++c) {
    int changed = 0;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) changed += patched(y, x, c) != base(y, x, c);
    CHECK(changed == 256);
  }
  CHECK_THROWS_AS(cutout(img, 1.5, rng), DomainError);
}

TEST_CASE("cutout patch is clipped at the border") {
  const Image base(10, 10, 1, 0.0f);
  const Image corner = ops::cutout_at(base, 4, 0, 0);
  CHECK((corner.array() == kFillValue).count() == 4);
}

TEST_CASE("every transform keeps intensities in [0,1] and shape unchanged") {
  Rng rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    const int channels = trial % 2 ? 3 : 1;
    const Image img = test::random_image(12, 9, channels, rng);
    const Image partner = test::random_image(12, 9, channels, rng);
    const SoftLabel y = one_hot(4, 1);
    for (auto kind : all_kinds()) {
      const double level = uniform01(rng);
      const auto out = apply_transform(img, kind, level, rng, MixPartner{&partner, &y});
      REQUIRE(out.image.same_shape(img));
      CHECK(out.image.array().minCoeff() >= 0.0f);
      CHECK(out.image.array().maxCoeff() <= 1.0f);
    }
  }
}

TEST_CASE("level-free kinds ignore the level") {
  Rng data_rng(9);
  const Image img = test::random_image(10, 10, 3, data_rng);
  for (auto kind : {TransformKind::AutoContrast, TransformKind::Equalize, TransformKind::Invert}) {
    CHECK(ignores_level(kind));
    Rng r0(1), r1(1);
    CHECK(apply_transform(img, kind, 0.0, r0).image == apply_transform(img, kind, 1.0, r1).image);
  }
  CHECK_FALSE(ignores_level(TransformKind::Rotate));
}

TEST_CASE("transforms are deterministic per rng seed") {
  Rng data_rng(10);
  const Image img = test::random_image(10, 10, 1, data_rng);
  const Image partner = test::random_image(10, 10, 1, data_rng);
  const SoftLabel y = one_hot(2, 0);
  for (auto kind : all_kinds()) {
    Rng a(77), b(77);
    CHECK(apply_transform(img, kind, 0.7, a, MixPartner{&partner, &y}).image ==
          apply_transform(img, kind, 0.7, b, MixPartner{&partner, &y}).image);
  }
}

TEST_CASE("invert is an involution") {
  Rng rng(11);
  const Image img = test::quantized_image(8, 8, 3, rng);
  CHECK(max_abs_diff(ops::invert(ops::invert(img)), img) <= 1e-6f);
}

TEST_CASE("rotation by multiples of 90 degrees is exact") {
  Rng rng(12);
  const Image img = test::random_image(9, 9, 1, rng);
  CHECK(ops::rotate(ops::rotate(img, 90.0), -90.0) == img);
  CHECK(ops::rotate(ops::rotate(img, 180.0), 180.0) == img);
  const Image r90 = ops::rotate(img, 90.0);
  // Counter-clockwise: the top-right corner moves to the top-left.
  CHECK(r90(0, 0, 0) == img(0, 8, 0));
}

TEST_CASE("rotation round trip on the interior") {
  const Image img = test::smooth_image(64, 64);
  for (double deg : {5.0, 10.0, 30.0}) {
    const Image back = ops::rotate(ops::rotate(img, deg), -deg);
    const double theta = deg * std::acos(-1.0) / 180.0;
    const int margin = static_cast<int>(std::ceil(theta * std::hypot(64.0, 64.0)));
    float worst = 0.0f;
    for (int y = margin; y < 64 - margin; ++y)
      for (int x = margin; x < 64 - margin; ++x) worst = std::max(worst, std::abs(back(y, x, 0) - img(y, x, 0)));
    CHECK(worst <= 2.0f / 255.0f);
  }
}

TEST_CASE("geometric transforms fill with mid-gray") {
  const Image img(8, 8, 1, 0.0f);
  const Image shifted = ops::translate_x(img, 3.0);
  CHECK(shifted(4, 0, 0) == kFillValue);
  CHECK(shifted(4, 7, 0) == 0.0f);
}

TEST_CASE("photometric primitives") {
  Image img(1, 4, 1);
  img(0, 0, 0) = 0.0f;
  img(0, 1, 0) = 0.25f;
  img(0, 2, 0) = 0.5f;
  img(0, 3, 0) = 0.75f;
  const Image sol = ops::solarize(img, 0.5);
  CHECK(sol(0, 2, 0) == 0.5f);  // strictly above the threshold inverts
  CHECK(sol(0, 3, 0) == doctest::Approx(0.25f));
  const Image ac = ops::auto_contrast(img);
  CHECK(ac(0, 0, 0) == 0.0f);
  CHECK(ac(0, 3, 0) == doctest::Approx(1.0f));
  const Image post = ops::posterize(img, 1);
  CHECK(post(0, 1, 0) == 0.0f);
  CHECK(post(0, 3, 0) == doctest::Approx(128.0f / 255.0f));
  CHECK(ops::brightness(img, 0.0).array().isZero());
  CHECK(ops::contrast(img, 1.0) == img);
  CHECK(ops::color(img, 1.0) == img);
  CHECK(ops::sharpness(img, 1.0) == img);
}

TEST_CASE("magnitude table") {
  CHECK(magnitude::posterize_bits(0.0) == 8);
  CHECK(magnitude::posterize_bits(1.0) == 4);
  CHECK(magnitude::solarize_threshold(0.25) == 0.75);
  CHECK(magnitude::kRotateDeg == 30.0);
  CHECK(magnitude::kMixupLambda == 0.4);
}
