#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "l2rir/error.hpp"

namespace l2rir {

// Channel-major float planes with every value in [0,1]. RGBImage, GrayMap
// and the 6-channel region stack are instantiations.
template <int Channels>
class ImageBuffer {
 public:
  static constexpr int kChannels = Channels;

  ImageBuffer() = default;

  // Zero-filled image. Throws DimensionError for non-positive sizes.
  ImageBuffer(int height, int width) : height_(height), width_(width) {
    if (height < 1 || width < 1) {
      throw DimensionError("image dimensions must be >= 1");
    }
    data_.assign(static_cast<std::size_t>(Channels) * height * width, 0.0);
  }

  ImageBuffer(int height, int width, double fill) : ImageBuffer(height, width) {
    check_range(fill);
    std::fill(data_.begin(), data_.end(), fill);
  }

  // Takes ownership of channel-major values. Throws DomainError if any value
  // lies outside [0,1].
  ImageBuffer(int height, int width, std::vector<double> data) : height_(height), width_(width) {
    if (height < 1 || width < 1) {
      throw DimensionError("image dimensions must be >= 1");
    }
    if (data.size() != static_cast<std::size_t>(Channels) * height * width) {
      throw DimensionError("image data size does not match dimensions");
    }
    for (double v : data) check_range(v);
    data_ = std::move(data);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const noexcept { return data_.empty(); }

  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }
  // Caller keeps the value in [0,1]; clamp() restores the invariant.
  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }

  std::span<const double> plane(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }
  std::span<double> plane(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  void clamp() {
    for (double& v : data_) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }

  bool same_shape(int height, int width) const noexcept {
    return height_ == height && width_ == width;
  }
  template <int Other>
  bool same_shape(const ImageBuffer<Other>& o) const noexcept {
    return same_shape(o.height(), o.width());
  }

  friend bool operator==(const ImageBuffer& a, const ImageBuffer& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.data_ == b.data_;
  }

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }
  static void check_range(double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("image value outside [0,1]");
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

using RGBImage = ImageBuffer<3>;
using GrayMap = ImageBuffer<1>;
using RegionStack = ImageBuffer<6>;

// dark = img * (1 - MAP), light = img * MAP; concatenated holds dark
// channels 0..2 followed by light channels 3..5.
struct RegionPair {
  RGBImage dark;
  RGBImage light;
  RegionStack concatenated;
};

// MAP(p) = 1 - max(r, g, b). Dark pixels map near 1.
GrayMap compute_attention_map(const RGBImage& img);

// Throws DimensionError when img and map differ in shape.
RegionPair split_regions(const RGBImage& img, const GrayMap& map);

// Channels (|r-g|, |r-b|, |g-b|).
RGBImage compute_detail_image(const RGBImage& img);

// Mean of (r+g+b)/3 over the image.
double mean_luminance(const RGBImage& img);

}  // namespace l2rir
