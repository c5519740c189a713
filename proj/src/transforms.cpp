// SPDX-License-Identifier: Apache-2.0
#include "latentaug/transforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace latentaug {

namespace {

constexpr std::array<std::string_view, kTransformCount> kNames = {
    "AutoContrast", "Brightness", "Color",     "Contrast", "Cutout",  "Equalize",
    "Invert",       "Mixup",      "Posterize", "Rotate",   "Sharpness", "ShearX",
    "ShearY",       "Solarize",   "TranslateX", "TranslateY"};

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

// Pixel fetch with a constant gray border.
float fetch(const Image& img, int y, int x, int c) {
  if (y < 0 || x < 0 || y >= img.height() || x >= img.width()) return kFillValue;
  return img(y, x, c);
}

float bilinear(const Image& img, double sy, double sx, int c) {
  const double fy = std::floor(sy);
  const double fx = std::floor(sx);
  const int y0 = static_cast<int>(fy);
  const int x0 = static_cast<int>(fx);
  const double wy = sy - fy;
  const double wx = sx - fx;
  // Exact pixel hits skip the blend so identity warps reproduce the input bit-for-bit.
  if (wy == 0.0 && wx == 0.0) return fetch(img, y0, x0, c);
  const double top = (1.0 - wx) * fetch(img, y0, x0, c) + wx * fetch(img, y0, x0 + 1, c);
  const double bot = (1.0 - wx) * fetch(img, y0 + 1, x0, c) + wx * fetch(img, y0 + 1, x0 + 1, c);
  return static_cast<float>((1.0 - wy) * top + wy * bot);
}

// out(y, x) = img(d*x + e*y + f, a*x + b*y + c) in (row, col) source coordinates.
struct InverseMap {
  double a, b, c;  // source x
  double d, e, f;  // source y
};

Image warp(const Image& img, const InverseMap& m) {
  Image out(img.height(), img.width(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double sx = m.a * x + m.b * y + m.c;
      const double sy = m.d * x + m.e * y + m.f;
      for (int ch = 0; ch < img.channels(); ++ch) out(y, x, ch) = bilinear(img, sy, sx, ch);
    }
  }
  return out.clamp01();
}

Image blend(const Image& degenerate, const Image& img, double factor) {
  Image out = img;
  const float f = static_cast<float>(factor);
  out.array() = degenerate.array() + f * (img.array() - degenerate.array());
  return out.clamp01();
}

Image grayscale_like(const Image& img) {
  Image gray(img.height(), img.width(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const float l = ops::luminance(img, y, x);
      for (int c = 0; c < img.channels(); ++c) gray(y, x, c) = l;
    }
  return gray;
}

double signed_level(double magnitude, Rng& rng) { return coin(rng) ? magnitude : -magnitude; }

}  // namespace

std::string_view to_string(TransformKind kind) { return kNames.at(static_cast<std::size_t>(kind)); }

TransformKind transform_from_id(int id) {
  if (id < 0 || id >= kTransformCount) throw RangeError("transform id out of range");
  return static_cast<TransformKind>(id);
}

namespace ops {

float luminance(const Image& img, int y, int x) {
  if (img.channels() == 1) return img(y, x, 0);
  return 0.299f * img(y, x, 0) + 0.587f * img(y, x, 1) + 0.114f * img(y, x, 2);
}

Image auto_contrast(const Image& img) {
  Image out = img;
  const int channels = img.channels();
  for (int c = 0; c < channels; ++c) {
    float lo = 1.0f;
    float hi = 0.0f;
    for (Eigen::Index i = c; i < img.size(); i += channels) {
      lo = std::min(lo, img.array()[i]);
      hi = std::max(hi, img.array()[i]);
    }
    if (hi <= lo) continue;
    const float scale = 1.0f / (hi - lo);
    for (Eigen::Index i = c; i < img.size(); i += channels) out.array()[i] = (img.array()[i] - lo) * scale;
  }
  return out.clamp01();
}

// Histogram equalization on the 8-bit quantized channel, PIL's lookup rule.
Image equalize(const Image& img) {
  Image out = img;
  const int channels = img.channels();
  for (int c = 0; c < channels; ++c) {
    std::array<long, 256> hist{};
    for (Eigen::Index i = c; i < img.size(); i += channels) ++hist[quantize(img.array()[i])];
    long total = 0;
    long last = 0;
    int nonzero = 0;
    for (long h : hist) {
      if (h == 0) continue;
      total += h;
      last = h;
      ++nonzero;
    }
    if (nonzero <= 1) continue;
    const long step = (total - last) / 255;
    if (step == 0) continue;
    std::array<float, 256> lut{};
    long n = step / 2;
    for (int v = 0; v < 256; ++v) {
      lut[v] = static_cast<float>(std::min<long>(n / step, 255)) / 255.0f;
      n += hist[v];
    }
    for (Eigen::Index i = c; i < img.size(); i += channels) out.array()[i] = lut[quantize(img.array()[i])];
  }
  return out;
}

Image invert(const Image& img) {
  Image out = img;
  out.array() = 1.0f - img.array();
  return out.clamp01();
}

Image posterize(const Image& img, int bits) {
  if (bits < 1 || bits > 8) throw DomainError("posterize: bits must be in [1,8]");
  const unsigned mask = ~((1u << (8 - bits)) - 1u) & 0xFFu;
  Image out = img;
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    out.array()[i] = static_cast<float>(quantize(img.array()[i]) & mask) / 255.0f;
  }
  return out;
}

Image solarize(const Image& img, double threshold) {
  Image out = img;
  const float thr = static_cast<float>(threshold);
  out.array() = (img.array() > thr).select(1.0f - img.array(), img.array());
  return out.clamp01();
}

Image brightness(const Image& img, double factor) {
  Image black(img.height(), img.width(), img.channels(), 0.0f);
  return blend(black, img, factor);
}

Image color(const Image& img, double factor) { return blend(grayscale_like(img), img, factor); }

Image contrast(const Image& img, double factor) {
  double mean = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) mean += luminance(img, y, x);
  const auto pixels = static_cast<double>(img.height()) * img.width();
  if (pixels > 0) mean /= pixels;
  Image degenerate(img.height(), img.width(), img.channels(), static_cast<float>(mean));
  return blend(degenerate, img, factor);
}

// Degenerate image is the 3x3 smoothing kernel [1 1 1; 1 5 1; 1 1 1] / 13 on
// the interior with the original border.
Image sharpness(const Image& img, double factor) {
  Image smooth = img;
  for (int y = 1; y + 1 < img.height(); ++y)
    for (int x = 1; x + 1 < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        float acc = 4.0f * img(y, x, c);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) acc += img(y + dy, x + dx, c);
        smooth(y, x, c) = acc / 13.0f;
      }
  return blend(smooth, img, factor);
}

Image rotate(const Image& img, double degrees) {
  const double cy = (img.height() - 1) / 2.0;
  const double cx = (img.width() - 1) / 2.0;
  double cs = 0.0;
  double sn = 0.0;
  const double quarter = degrees / 90.0;
  if (quarter == std::round(quarter)) {
    // Exact trigonometry on multiples of 90 degrees.
    constexpr std::array<std::array<double, 2>, 4> table = {{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
    const auto q = static_cast<std::size_t>(((static_cast<long>(quarter) % 4) + 4) % 4);
    cs = table[q][0];
    sn = table[q][1];
  } else {
    const double rad = degrees * std::numbers::pi / 180.0;
    cs = std::cos(rad);
    sn = std::sin(rad);
  }
  // Source point = R(-theta) (p - center) + center, with y pointing down so a
  // positive angle turns the content counter-clockwise on screen.
  const InverseMap m{cs, -sn, cx - cs * cx + sn * cy, sn, cs, cy - sn * cx - cs * cy};
  return warp(img, m);
}

Image shear_x(const Image& img, double factor) {
  const double cy = (img.height() - 1) / 2.0;
  return warp(img, InverseMap{1.0, factor, -factor * cy, 0.0, 1.0, 0.0});
}

Image shear_y(const Image& img, double factor) {
  const double cx = (img.width() - 1) / 2.0;
  return warp(img, InverseMap{1.0, 0.0, 0.0, factor, 1.0, -factor * cx});
}

Image translate_x(const Image& img, double pixels) {
  return warp(img, InverseMap{1.0, 0.0, -pixels, 0.0, 1.0, 0.0});
}

Image translate_y(const Image& img, double pixels) {
  return warp(img, InverseMap{1.0, 0.0, 0.0, 0.0, 1.0, -pixels});
}

Image cutout_at(const Image& img, int side, int cy, int cx) {
  Image out = img;
  if (side <= 0) return out;
  const int y0 = std::max(0, cy - side / 2);
  const int x0 = std::max(0, cx - side / 2);
  const int y1 = std::min(img.height(), cy - side / 2 + side);
  const int x1 = std::min(img.width(), cx - side / 2 + side);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = kFillValue;
  return out;
}

}  // namespace ops

Image cutout(const Image& img, double side_frac, Rng& rng) {
  if (!(side_frac >= 0.0 && side_frac <= 1.0)) throw DomainError("cutout: side_frac must be in [0,1]");
  const int cy = uniform_int(rng, 0, std::max(0, img.height() - 1));
  const int cx = uniform_int(rng, 0, std::max(0, img.width() - 1));
  const int side = static_cast<int>(std::ceil(side_frac * std::min(img.height(), img.width())));
  return ops::cutout_at(img, side, cy, cx);
}

Mixed mixup(const Image& img_a, const SoftLabel& label_a, const Image& img_b, const SoftLabel& label_b,
            double lambda) {
  if (!img_a.same_shape(img_b)) throw DimensionError("mixup: image shapes differ");
  if (label_a.size() != label_b.size()) throw DimensionError("mixup: label lengths differ");
  if (!(lambda >= 0.0 && lambda <= 0.5)) throw DomainError("mixup: lambda must be in [0, 0.5]");
  Mixed out{img_a, label_a};
  const float lf = static_cast<float>(lambda);
  out.image.array() = (1.0f - lf) * img_a.array() + lf * img_b.array();
  out.image.clamp01();
  out.label = (1.0 - lambda) * label_a + lambda * label_b;
  return out;
}

TransformOutput apply_transform(const Image& img, TransformKind kind, double level, Rng& rng,
                                std::optional<MixPartner> partner) {
  if (!std::isfinite(level)) throw DomainError("apply_transform: non-finite level");
  if (level < 0.0 || level > 1.0) throw DomainError("apply_transform: level must be in [0,1]");
  namespace mag = magnitude;
  const auto enhance = [&] { return 1.0 + signed_level(mag::kEnhance * level, rng); };
  switch (kind) {
    case TransformKind::AutoContrast: return {ops::auto_contrast(img)};
    case TransformKind::Brightness: return {ops::brightness(img, enhance())};
    case TransformKind::Color: return {ops::color(img, enhance())};
    case TransformKind::Contrast: return {ops::contrast(img, enhance())};
    case TransformKind::Cutout: return {cutout(img, mag::kCutoutFrac * level, rng)};
    case TransformKind::Equalize: return {ops::equalize(img)};
    case TransformKind::Invert: return {ops::invert(img)};
    case TransformKind::Mixup: {
      if (!partner || partner->image == nullptr) throw MissingPartnerError("Mixup requires a partner sample");
      const double lambda = mag::kMixupLambda * level;
      Image out = img;
      const float lf = static_cast<float>(lambda);
      if (!img.same_shape(*partner->image)) throw DimensionError("mixup: image shapes differ");
      out.array() = (1.0f - lf) * img.array() + lf * partner->image->array();
      return {out.clamp01(), lambda};
    }
    case TransformKind::Posterize: return {ops::posterize(img, mag::posterize_bits(level))};
    case TransformKind::Rotate: return {ops::rotate(img, signed_level(mag::kRotateDeg * level, rng))};
    case TransformKind::Sharpness: return {ops::sharpness(img, enhance())};
    case TransformKind::ShearX: return {ops::shear_x(img, signed_level(mag::kShear * level, rng))};
    case TransformKind::ShearY: return {ops::shear_y(img, signed_level(mag::kShear * level, rng))};
    case TransformKind::Solarize: return {ops::solarize(img, mag::solarize_threshold(level))};
    case TransformKind::TranslateX:
      return {ops::translate_x(img, signed_level(mag::kTranslate * level, rng) * img.width())};
    case TransformKind::TranslateY:
      return {ops::translate_y(img, signed_level(mag::kTranslate * level, rng) * img.height())};
  }
  throw DomainError("apply_transform: unknown kind");
}

}  // namespace latentaug
