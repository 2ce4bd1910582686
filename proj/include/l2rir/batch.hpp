#pragma once

#include <span>
#include <vector>

#include "l2rir/image.hpp"
#include "l2rir/tensor.hpp"

namespace l2rir {

// Stacks same-sized images into an N x C x H x W tensor.
// Throws DimensionError for mixed sizes or an empty batch.
template <int Channels>
Tensor to_tensor(std::span<const ImageBuffer<Channels>> images) {
  if (images.empty()) throw DimensionError("empty image batch");
  const int h = images.front().height(), w = images.front().width();
  Tensor t(Shape{static_cast<int>(images.size()), Channels, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (!images[n].same_shape(h, w)) throw DimensionError("image batch has mixed sizes");
    std::copy(images[n].values().begin(), images[n].values().end(), t.sample(static_cast<int>(n)));
  }
  return t;
}

inline Tensor to_tensor(const std::vector<RGBImage>& images) {
  return to_tensor(std::span<const RGBImage>(images));
}

// Sample n of a 3-channel tensor, clamped into [0,1].
RGBImage image_from_tensor(const Tensor& t, int n);
std::vector<RGBImage> images_from_tensor(const Tensor& t);

}  // namespace l2rir
