#include "l2rir/batch.hpp"

#include <algorithm>

namespace l2rir {

RGBImage image_from_tensor(const Tensor& t, int n) {
  const Shape& s = t.shape();
  if (s.c != 3 || n < 0 || n >= s.n) throw DimensionError("image_from_tensor: bad shape " + s.str());
  std::vector<double> data(t.sample(n), t.sample(n) + s.sample_size());
  for (double& v : data) v = std::clamp(v, 0.0, 1.0);
  return RGBImage(s.h, s.w, std::move(data));
}

std::vector<RGBImage> images_from_tensor(const Tensor& t) {
  std::vector<RGBImage> out;
  out.reserve(t.shape().n);
  for (int n = 0; n < t.shape().n; ++n) out.push_back(image_from_tensor(t, n));
  return out;
}

}  // namespace l2rir
