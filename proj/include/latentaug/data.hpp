// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "latentaug/image.hpp"
#include "latentaug/nn.hpp"
#include "latentaug/rng.hpp"

namespace latentaug {

enum class Split { Train, Test };
enum class DatasetKind { Mnist, Cifar10, Blobs };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view name);

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  int classes = 0;
  Split split = Split::Train;

  std::size_t size() const { return images.size(); }
  /// First `n` samples (all when n >= size()).
  Dataset head(std::size_t n) const;
  /// Throws if sizes, labels or shapes violate the dataset invariants.
  void validate() const;
};

/// IDX (MNIST) files: big-endian magic 0x00000803 / 0x00000801, u8 pixels.
Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                       Split split = Split::Train);

/// Writes images (quantized to u8) and labels as an IDX pair.
void save_mnist_idx(const Dataset& data, const std::filesystem::path& images_path,
                    const std::filesystem::path& labels_path);

inline constexpr std::size_t kCifarRecordBytes = 3073;

/// CIFAR-10 binary batches: records of 1 label byte + 3072 channel-planar pixels.
Dataset load_cifar10_bin(std::span<const std::filesystem::path> paths, Split split = Split::Train);

/// Stratified Gaussian clusters. Sample i has label i % C and features
/// mean_c + spread * N(0,1), clamped to [0,1], where mean_c[j] = (j % C == c).
/// `dim` must be a perfect square >= C; images are sqrt(dim) x sqrt(dim).
Dataset gen_blobs(std::size_t n, int classes, int dim, double spread, std::uint64_t seed,
                  Split split = Split::Train);

/// Explicit geometry of one baseline-preprocessing draw.
struct CropDraw {
  bool flip = false;
  int offset_y = 0;  // in padded coordinates, centered = pad
  int offset_x = 0;
};

int baseline_padding(DatasetKind kind);
CropDraw draw_crop(DatasetKind kind, Rng& rng);
/// Horizontal flip, zero padding and crop back to the input size.
Image apply_crop(const Image& img, int pad, const CropDraw& draw);
/// CIFAR: flip w.p. 0.5, pad 4, random crop. MNIST: pad 2, random crop. Blobs: identity.
Image baseline_preprocess(const Image& img, DatasetKind kind, Rng& rng);

struct BatchPlan {
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  std::size_t epochs = 1;
};

/// Per-epoch shuffled partition of [0, n) into batches; last batch may be short.
std::vector<std::vector<std::size_t>> batches(std::size_t n, const BatchPlan& plan, std::size_t epoch);

/// Per-channel mean and standard deviation used to standardize model inputs.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

ChannelStats channel_stats(std::span<const Image> images);

/// Flattens images into columns (HWC order), optionally standardized.
template <typename Scalar>
nn::Matrix<Scalar> to_model_input(std::span<const Image> images, const std::optional<ChannelStats>& stats = {}) {
  if (images.empty()) return {};
  const auto dim = images.front().size();
  nn::Matrix<Scalar> x(dim, static_cast<Eigen::Index>(images.size()));
  for (std::size_t j = 0; j < images.size(); ++j) {
    const auto& img = images[j];
    if (img.size() != dim) throw DimensionError("to_model_input: images differ in size");
    x.col(static_cast<Eigen::Index>(j)) = img.array().cast<Scalar>().matrix();
    if (stats) {
      const int channels = img.channels();
      for (Eigen::Index i = 0; i < dim; ++i) {
        const auto c = static_cast<std::size_t>(i % channels);
        x(i, static_cast<Eigen::Index>(j)) =
            static_cast<Scalar>((x(i, static_cast<Eigen::Index>(j)) - stats->mean[c]) / stats->stddev[c]);
      }
    }
  }
  return x;
}

}  // namespace latentaug
