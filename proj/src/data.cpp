// SPDX-License-Identifier: Apache-2.0
#include "latentaug/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "latentaug/io.hpp"

namespace latentaug {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(const std::string& bytes, std::size_t at) {
  if (at + 4 > bytes.size()) throw LengthError("IDX: truncated header");
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[at + i]);
  return v;
}

void put_be32(std::string& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

float byte_to_unit(unsigned char b) { return static_cast<float>(b) / 255.0f; }

unsigned char unit_to_byte(float v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Mnist: return "mnist";
    case DatasetKind::Cifar10: return "cifar10";
    case DatasetKind::Blobs: return "blobs";
  }
  return "?";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "mnist") return DatasetKind::Mnist;
  if (name == "cifar10") return DatasetKind::Cifar10;
  if (name == "blobs") return DatasetKind::Blobs;
  throw ConfigError("unknown dataset kind: " + std::string(name));
}

Dataset Dataset::head(std::size_t n) const {
  Dataset out{{}, {}, classes, split};
  const std::size_t m = std::min(n, size());
  out.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(m));
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(m));
  return out;
}

void Dataset::validate() const {
  if (images.size() != labels.size()) throw DimensionError("dataset: image and label counts differ");
  for (int y : labels)
    if (y < 0 || y >= classes) throw RangeError("dataset: label out of range");
  for (const auto& img : images)
    if (!img.same_shape(images.front())) throw DimensionError("dataset: images differ in shape");
}

Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                       Split split) {
  const std::string img_bytes = read_file(images_path);
  const std::string lbl_bytes = read_file(labels_path);
  if (read_be32(img_bytes, 0) != kIdxImagesMagic) throw FormatError("IDX: bad image magic in " + images_path.string());
  if (read_be32(lbl_bytes, 0) != kIdxLabelsMagic) throw FormatError("IDX: bad label magic in " + labels_path.string());

  const std::size_t n = read_be32(img_bytes, 4);
  const int rows = static_cast<int>(read_be32(img_bytes, 8));
  const int cols = static_cast<int>(read_be32(img_bytes, 12));
  const std::size_t n_labels = read_be32(lbl_bytes, 4);
  if (n != n_labels) throw FormatError("IDX: image and label counts differ");
  const std::size_t pixels = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (img_bytes.size() != 16 + n * pixels) throw LengthError("IDX: image payload length mismatch");
  if (lbl_bytes.size() != 8 + n) throw LengthError("IDX: label payload length mismatch");

  Dataset out;
  out.classes = 10;
  out.split = split;
  out.images.reserve(n);
  out.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Image img(rows, cols, 1);
    const std::size_t base = 16 + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p)
      img.array()[static_cast<Eigen::Index>(p)] = byte_to_unit(static_cast<unsigned char>(img_bytes[base + p]));
    out.images.push_back(std::move(img));
    const int label = static_cast<unsigned char>(lbl_bytes[8 + i]);
    if (label >= out.classes) throw RangeError("IDX: label >= 10");
    out.labels.push_back(label);
  }
  return out;
}

void save_mnist_idx(const Dataset& data, const std::filesystem::path& images_path,
                    const std::filesystem::path& labels_path) {
  data.validate();
  const int rows = data.images.empty() ? 0 : data.images.front().height();
  const int cols = data.images.empty() ? 0 : data.images.front().width();
  if (!data.images.empty() && data.images.front().channels() != 1) throw DimensionError("IDX: images must be single-channel");
  std::string img_bytes;
  put_be32(img_bytes, kIdxImagesMagic);
  put_be32(img_bytes, static_cast<std::uint32_t>(data.size()));
  put_be32(img_bytes, static_cast<std::uint32_t>(rows));
  put_be32(img_bytes, static_cast<std::uint32_t>(cols));
  for (const auto& img : data.images)
    for (float v : img.array()) img_bytes.push_back(static_cast<char>(unit_to_byte(v)));
  std::string lbl_bytes;
  put_be32(lbl_bytes, kIdxLabelsMagic);
  put_be32(lbl_bytes, static_cast<std::uint32_t>(data.size()));
  for (int y : data.labels) lbl_bytes.push_back(static_cast<char>(y));
  write_file_atomic(images_path, img_bytes);
  write_file_atomic(labels_path, lbl_bytes);
}

Dataset load_cifar10_bin(std::span<const std::filesystem::path> paths, Split split) {
  constexpr int side = 32;
  constexpr std::size_t plane = side * side;
  Dataset out;
  out.classes = 10;
  out.split = split;
  for (const auto& path : paths) {
    const std::string bytes = read_file(path);
    if (bytes.size() % kCifarRecordBytes != 0)
      throw LengthError("CIFAR: size of " + path.string() + " is not a multiple of 3073");
    const std::size_t records = bytes.size() / kCifarRecordBytes;
    for (std::size_t r = 0; r < records; ++r) {
      const std::size_t base = r * kCifarRecordBytes;
      const int label = static_cast<unsigned char>(bytes[base]);
      if (label >= out.classes) throw RangeError("CIFAR: label byte >= 10 in " + path.string());
      Image img(side, side, 3);
      for (int c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < plane; ++p) {
          const auto v = static_cast<unsigned char>(bytes[base + 1 + c * plane + p]);
          img(static_cast<int>(p / side), static_cast<int>(p % side), c) = byte_to_unit(v);
        }
      out.images.push_back(std::move(img));
      out.labels.push_back(label);
    }
  }
  return out;
}

Dataset gen_blobs(std::size_t n, int classes, int dim, double spread, std::uint64_t seed, Split split) {
  if (classes < 1 || n < static_cast<std::size_t>(classes)) throw DomainError("gen_blobs: need n >= C >= 1");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
  if (side * side != dim || dim < classes) throw DomainError("gen_blobs: dim must be a perfect square >= C");
  if (!(spread >= 0.0)) throw DomainError("gen_blobs: spread must be >= 0");
  Rng rng = derive_rng(seed, {0xB10B5});
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset out;
  out.classes = classes;
  out.split = split;
  out.images.reserve(n);
  out.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    Image img(side, side, 1);
    for (int j = 0; j < dim; ++j) {
      const double mean = (j % classes == label) ? 1.0 : 0.0;
      const double noise = spread > 0.0 ? spread * normal(rng) : 0.0;
      img.array()[j] = static_cast<float>(std::clamp(mean + noise, 0.0, 1.0));
    }
    out.images.push_back(std::move(img));
    out.labels.push_back(label);
  }
  return out;
}

int baseline_padding(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Cifar10: return 4;
    case DatasetKind::Mnist: return 2;
    case DatasetKind::Blobs: return 0;
  }
  return 0;
}

CropDraw draw_crop(DatasetKind kind, Rng& rng) {
  const int pad = baseline_padding(kind);
  CropDraw d;
  if (kind == DatasetKind::Cifar10) d.flip = coin(rng);
  d.offset_y = pad > 0 ? uniform_int(rng, 0, 2 * pad) : 0;
  d.offset_x = pad > 0 ? uniform_int(rng, 0, 2 * pad) : 0;
  return d;
}

Image apply_crop(const Image& img, int pad, const CropDraw& draw) {
  if (draw.offset_y < 0 || draw.offset_x < 0 || draw.offset_y > 2 * pad || draw.offset_x > 2 * pad)
    throw DomainError("apply_crop: crop offset outside the padded image");
  Image out(img.height(), img.width(), img.channels(), 0.0f);
  for (int y = 0; y < img.height(); ++y) {
    const int sy = y + draw.offset_y - pad;
    if (sy < 0 || sy >= img.height()) continue;
    for (int x = 0; x < img.width(); ++x) {
      int sx = x + draw.offset_x - pad;
      if (sx < 0 || sx >= img.width()) continue;
      if (draw.flip) sx = img.width() - 1 - sx;
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = img(sy, sx, c);
    }
  }
  return out;
}

Image baseline_preprocess(const Image& img, DatasetKind kind, Rng& rng) {
  if (kind == DatasetKind::Blobs) return img;
  return apply_crop(img, baseline_padding(kind), draw_crop(kind, rng));
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, const BatchPlan& plan, std::size_t epoch) {
  if (plan.batch_size < 1) throw DomainError("batches: batch size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive_rng(plan.seed, {0x5EED, epoch});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t at = 0; at < n; at += plan.batch_size) {
    const std::size_t end = std::min(n, at + plan.batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

ChannelStats channel_stats(std::span<const Image> images) {
  if (images.empty()) throw DomainError("channel_stats: no images");
  const int channels = images.front().channels();
  ChannelStats s{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
  std::vector<double> sq(channels, 0.0);
  double count = 0.0;
  for (const auto& img : images) {
    for (Eigen::Index i = 0; i < img.size(); ++i) {
      const double v = img.array()[i];
      s.mean[i % channels] += v;
      sq[i % channels] += v * v;
    }
    count += static_cast<double>(img.size() / channels);
  }
  for (int c = 0; c < channels; ++c) {
    s.mean[c] /= count;
    const double var = sq[c] / count - s.mean[c] * s.mean[c];
    s.stddev[c] = std::sqrt(std::max(var, 1e-12));
  }
  return s;
}

}  // namespace latentaug
