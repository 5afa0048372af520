#pragma once

#include "nvs/error.h"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace nvs {

/// Dense row-major H x W grid of values.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_size(int w, int h) const { return width_ == w && height_ == h; }
  template <typename U>
  bool same_size(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool operator==(const Grid&) const = default;

 protected:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

 private:
  static std::size_t checked_size(int w, int h) {
    if (w < 0 || h < 0) throw Error(ErrorCode::InvalidArgument, "negative grid size");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Background marker for depth-like grids. Never a plausible depth.
inline constexpr float kNoDepth = std::numeric_limits<float>::infinity();
inline bool has_depth(float z) { return z < kNoDepth; }

/// Camera-space z per pixel; background cells hold kNoDepth.
struct DepthMap : Grid<float> {
  DepthMap() = default;
  DepthMap(int width, int height) : Grid<float>(width, height, kNoDepth) {}
};

/// Camera-space unit normals; background cells hold the zero vector.
struct NormalMap : Grid<Eigen::Vector3f> {
  NormalMap() = default;
  NormalMap(int width, int height) : Grid<Eigen::Vector3f>(width, height, Eigen::Vector3f::Zero()) {}
};

struct Mask : Grid<std::uint8_t> {
  Mask() = default;
  Mask(int width, int height, bool fill = false) : Grid<std::uint8_t>(width, height, fill ? 1 : 0) {}

  std::size_t count() const;
};

Mask mask_from_depth(const DepthMap& depth);
Mask mask_and(const Mask& a, const Mask& b);

/// H x W x C floats, channels contiguous per pixel, pixels row-major.
class MultiChannelMap {
 public:
  MultiChannelMap() = default;
  MultiChannelMap(int width, int height, int channels, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool same_size(int w, int h) const { return width_ == w && height_ == h; }

  float* pixel(int x, int y) { return data_.data() + offset(x, y); }
  const float* pixel(int x, int y) const { return data_.data() + offset(x, y); }
  float& at(int x, int y, int c) { return data_[offset(x, y) + static_cast<std::size_t>(c)]; }
  float at(int x, int y, int c) const { return data_[offset(x, y) + static_cast<std::size_t>(c)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool operator==(const MultiChannelMap&) const = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
           static_cast<std::size_t>(channels_);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Learned or stub feature map, any channel count.
class FeatureMap : public MultiChannelMap {
 public:
  FeatureMap() = default;
  FeatureMap(int width, int height, int channels, float fill = 0.0f)
      : MultiChannelMap(width, height, channels, fill) {}
};

/// RGB image, channels in [0, 1].
class Image : public MultiChannelMap {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, float fill = 0.0f) : MultiChannelMap(width, height, kChannels, fill) {}
  Image(int width, int height, const Eigen::Vector3f& color);

  Eigen::Vector3f rgb(int x, int y) const {
    const float* p = pixel(x, y);
    return {p[0], p[1], p[2]};
  }
  void set_rgb(int x, int y, const Eigen::Vector3f& c) {
    float* p = pixel(x, y);
    p[0] = c.x();
    p[1] = c.y();
    p[2] = c.z();
  }

  /// Clamps every channel to [0, 1]; non-finite values become 0.
  void clamp();
};

}  // namespace nvs
