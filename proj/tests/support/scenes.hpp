#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "l2rir/image.hpp"
#include "l2rir/png_io.hpp"
#include "l2rir/random.hpp"

namespace l2rir::testing {

// Smooth colour field with a few rectangles and a sinusoidal texture.
inline RGBImage make_scene(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  RGBImage img(h, w);
  double base[3], slope_x[3], slope_y[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(0.25, 0.75);
    slope_x[c] = rng.uniform(-0.3, 0.3);
    slope_y[c] = rng.uniform(-0.3, 0.3);
  }
  const double fx = rng.uniform(0.05, 0.3), fy = rng.uniform(0.05, 0.3), amp = rng.uniform(0.03, 0.12);
  for (int c = 0; c < 3; ++c) {
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = base[c] + slope_x[c] * (x / double(w) - 0.5) + slope_y[c] * (y / double(h) - 0.5) +
                         amp * std::sin(fx * x + fy * y + phase);
        img.at(c, y, x) = v;
      }
    }
  }
  const int rects = 2 + static_cast<int>(rng.uniform_int(0, 3));
  for (int r = 0; r < rects; ++r) {
    const int y0 = static_cast<int>(rng.uniform_int(0, h - 1)), x0 = static_cast<int>(rng.uniform_int(0, w - 1));
    const int rh = static_cast<int>(rng.uniform_int(h / 8 + 1, h / 3 + 1));
    const int rw = static_cast<int>(rng.uniform_int(w / 8 + 1, w / 3 + 1));
    double col[3];
    for (double& v : col) v = rng.uniform(0.1, 0.9);
    for (int y = y0; y < std::min(h, y0 + rh); ++y) {
      for (int x = x0; x < std::min(w, x0 + rw); ++x) {
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = col[c];
      }
    }
  }
  img.clamp();
  return img;
}

// Achromatic diagonal streaks blended towards white.
inline RGBImage add_rain(const RGBImage& clean, std::uint64_t seed, int streaks = 0) {
  Rng rng(seed);
  RGBImage out = clean;
  const int h = clean.height(), w = clean.width();
  if (streaks == 0) streaks = h * w / 60;
  const double angle = rng.uniform(-0.35, 0.35);
  const double dx = std::sin(angle), dy = std::cos(angle);
  for (int s = 0; s < streaks; ++s) {
    const double x0 = rng.uniform(0.0, w), y0 = rng.uniform(0.0, h);
    const int len = static_cast<int>(rng.uniform_int(4, 12));
    const double alpha = rng.uniform(0.3, 0.7);
    for (int t = 0; t < len; ++t) {
      const int x = static_cast<int>(std::lround(x0 + dx * t)), y = static_cast<int>(std::lround(y0 + dy * t));
      if (x < 0 || y < 0 || x >= w || y >= h) continue;
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = out.at(c, y, x) + alpha * (0.95 - out.at(c, y, x));
    }
  }
  out.clamp();
  return out;
}

inline RGBImage random_image(int h, int w, Rng& rng, double lo = 0.0, double hi = 1.0) {
  RGBImage img(h, w);
  for (double& v : img.values()) v = rng.uniform(lo, hi);
  return img;
}

// Writes n source pairs <id>_rain.png / <id>_gt.png into dir.
inline std::vector<std::string> write_source_pairs(const std::filesystem::path& dir, int n, int h, int w,
                                                   std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "img%03d", i);
    const RGBImage clean = make_scene(h, w, derive_seed(seed, std::string("scene") + id));
    const RGBImage rainy = add_rain(clean, derive_seed(seed, std::string("rain") + id));
    write_png(dir / (std::string(id) + "_gt.png"), clean);
    write_png(dir / (std::string(id) + "_rain.png"), rainy);
    ids.emplace_back(id);
  }
  return ids;
}

}  // namespace l2rir::testing
