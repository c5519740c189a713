// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string_view>

#include "latentaug/image.hpp"
#include "latentaug/rng.hpp"

namespace latentaug {

/// The 16 augmentation operations. Integer ids are stable.
enum class TransformKind : int {
  AutoContrast = 0,
  Brightness,
  Color,
  Contrast,
  Cutout,
  Equalize,
  Invert,
  Mixup,
  Posterize,
  Rotate,
  Sharpness,
  ShearX,
  ShearY,
  Solarize,
  TranslateX,
  TranslateY,
};

inline constexpr int kTransformCount = 16;

std::string_view to_string(TransformKind kind);
TransformKind transform_from_id(int id);

/// Kinds whose output does not depend on the magnitude level.
constexpr bool ignores_level(TransformKind kind) {
  return kind == TransformKind::AutoContrast || kind == TransformKind::Equalize ||
         kind == TransformKind::Invert;
}

/// Magnitude table: level t in [0,1] to the concrete operation parameter.
namespace magnitude {
inline constexpr double kShear = 0.3;        // shear factor at t = 1
inline constexpr double kTranslate = 0.3;    // fraction of axis length
inline constexpr double kRotateDeg = 30.0;
inline constexpr double kEnhance = 0.9;      // factor = 1 +- 0.9 t
inline constexpr double kCutoutFrac = 0.2;
inline constexpr double kMixupLambda = 0.4;

inline int posterize_bits(double t) { return 8 - static_cast<int>(std::floor(4.0 * t)); }
inline double solarize_threshold(double t) { return 1.0 - t; }
}  // namespace magnitude

/// Gray value used for out-of-bounds samples and cutout patches.
inline constexpr float kFillValue = 0.5f;

// Parameterized primitives. All outputs are clamped to [0,1] and keep the
// input shape.
namespace ops {

Image auto_contrast(const Image& img);
Image equalize(const Image& img);
Image invert(const Image& img);
Image posterize(const Image& img, int bits);
/// Inverts every intensity strictly above `threshold`.
Image solarize(const Image& img, double threshold);

// Enhancement blends: degenerate + factor * (img - degenerate).
Image brightness(const Image& img, double factor);
Image color(const Image& img, double factor);
Image contrast(const Image& img, double factor);
Image sharpness(const Image& img, double factor);

/// Counter-clockwise rotation about the image center, bilinear.
Image rotate(const Image& img, double degrees);
Image shear_x(const Image& img, double factor);
Image shear_y(const Image& img, double factor);
/// Content moves by `pixels` along the axis (positive = right / down).
Image translate_x(const Image& img, double pixels);
Image translate_y(const Image& img, double pixels);

/// Fills a square of side `side` centered at (cy, cx), clipped to the image.
Image cutout_at(const Image& img, int side, int cy, int cx);

/// Luminance (ITU-R 601) of pixel (y, x); the pixel itself for 1 channel.
float luminance(const Image& img, int y, int x);

}  // namespace ops

/// Square patch of side ceil(side_frac * min(H,W)) at a uniform random center.
Image cutout(const Image& img, double side_frac, Rng& rng);

struct Mixed {
  Image image;
  SoftLabel label;
};

/// (1 - lambda) * A + lambda * B for both image and label.
Mixed mixup(const Image& img_a, const SoftLabel& label_a, const Image& img_b, const SoftLabel& label_b,
            double lambda);

struct MixPartner {
  const Image* image = nullptr;
  const SoftLabel* label = nullptr;
};

struct TransformOutput {
  Image image;
  /// Mixing weight applied to the partner label; 0 for every kind but Mixup.
  double mix_weight = 0.0;
};

/// Applies one transform at magnitude level t in [0,1]. Signed magnitudes take
/// their sign from a fair coin drawn from `rng`.
TransformOutput apply_transform(const Image& img, TransformKind kind, double level, Rng& rng,
                                std::optional<MixPartner> partner = std::nullopt);

}  // namespace latentaug
