// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "latentaug/errors.hpp"

namespace latentaug {

/// Dense H x W x C grid of intensities in [0,1], stored row-major with
/// interleaved channels: index = (y * width + x) * channels + c.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0f)
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || (channels != 1 && channels != 3)) {
      throw DimensionError("Image: invalid shape");
    }
    data_.setConstant(static_cast<Eigen::Index>(height) * width * channels, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  Eigen::Index size() const { return data_.size(); }

  float& operator()(int y, int x, int c) { return data_[index(y, x, c)]; }
  float operator()(int y, int x, int c) const { return data_[index(y, x, c)]; }

  Eigen::ArrayXf& array() { return data_; }
  const Eigen::ArrayXf& array() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  Image& clamp01() {
    data_ = data_.max(0.0f).min(1.0f);
    return *this;
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.same_shape(b) && (a.data_ == b.data_).all();
  }

 private:
  Eigen::Index index(int y, int x, int c) const {
    return (static_cast<Eigen::Index>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  Eigen::ArrayXf data_;
};

/// Class weights over C categories; non-negative and summing to one.
using SoftLabel = Eigen::VectorXd;

inline SoftLabel one_hot(int classes, int label) {
  if (label < 0 || label >= classes) throw RangeError("one_hot: label out of range");
  SoftLabel out = SoftLabel::Zero(classes);
  out[label] = 1.0;
  return out;
}

}  // namespace latentaug
