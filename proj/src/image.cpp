#include "l2rir/image.hpp"

#include <algorithm>
#include <cmath>

namespace l2rir {

GrayMap compute_attention_map(const RGBImage& img) {
  GrayMap map(img.height(), img.width());
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto out = map.plane(0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 1.0 - std::max({r[i], g[i], b[i]});
  }
  return map;
}

RegionPair split_regions(const RGBImage& img, const GrayMap& map) {
  if (!img.same_shape(map)) {
    throw DimensionError("split_regions: image and attention map differ in shape");
  }
  RegionPair out{RGBImage(img.height(), img.width()), RGBImage(img.height(), img.width()),
                 RegionStack(img.height(), img.width())};
  auto m = map.plane(0);
  for (int c = 0; c < 3; ++c) {
    auto src = img.plane(c);
    auto dark = out.dark.plane(c);
    auto light = out.light.plane(c);
    auto stack_dark = out.concatenated.plane(c);
    auto stack_light = out.concatenated.plane(c + 3);
    for (std::size_t i = 0; i < src.size(); ++i) {
      dark[i] = src[i] * (1.0 - m[i]);
      light[i] = src[i] * m[i];
      stack_dark[i] = dark[i];
      stack_light[i] = light[i];
    }
  }
  return out;
}

RGBImage compute_detail_image(const RGBImage& img) {
  RGBImage out(img.height(), img.width());
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto a = out.plane(0), bb = out.plane(1), c = out.plane(2);
  for (std::size_t i = 0; i < r.size(); ++i) {
    a[i] = std::abs(r[i] - g[i]);
    bb[i] = std::abs(r[i] - b[i]);
    c[i] = std::abs(g[i] - b[i]);
  }
  return out;
}

double mean_luminance(const RGBImage& img) {
  double sum = 0.0;
  for (double v : img.values()) sum += v;
  return sum / static_cast<double>(img.values().size());
}

}  // namespace l2rir
