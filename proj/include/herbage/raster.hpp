#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "herbage/error.hpp"

namespace herbage {

/// Row-major interleaved raster. Pixel (x, y) channel c lives at
/// ((y * width + x) * channels + c).
template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, int c = 1, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool empty() const { return width <= 0 || height <= 0; }

  T& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(int w, int h) const { return width == w && height == h; }
  template <typename U>
  bool same_shape(const Raster<U>& o) const { return width == o.width && height == o.height; }

  bool operator==(const Raster&) const = default;
};

using RgbImage = Raster<std::uint8_t>;      // 3 channels, RGB order
using Mask = Raster<std::uint8_t>;          // 1 channel
using LabelMap = Raster<std::uint8_t>;      // class index per pixel
using HeightCounts = Raster<std::uint32_t>; // paste count per pixel
using HeightMap = Raster<float>;            // normalized height

/// Per-pixel class-probability raster, stored as C planar planes. Held in
/// double precision; the SMP1 container stores f32.
class ScoreMap {
 public:
  ScoreMap() = default;
  ScoreMap(int width, int height, int classes, double fill = 0.0)
      : width_(width), height_(height), classes_(classes),
        data_(static_cast<std::size_t>(width) * height * classes, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int classes() const { return classes_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::span<double> plane(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * pixel_count(), pixel_count()};
  }
  std::span<const double> plane(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * pixel_count(), pixel_count()};
  }

  double& at(int c, std::size_t pixel) { return data_[static_cast<std::size_t>(c) * pixel_count() + pixel]; }
  double at(int c, std::size_t pixel) const { return data_[static_cast<std::size_t>(c) * pixel_count() + pixel]; }

  std::span<double> raw() { return data_; }
  std::span<const double> raw() const { return data_; }

  bool operator==(const ScoreMap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int classes_ = 0;
  std::vector<double> data_;
};

}  // namespace herbage
