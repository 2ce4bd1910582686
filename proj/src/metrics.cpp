#include "l2rir/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace l2rir {

std::string_view to_string(PsnrMode mode) { return mode == PsnrMode::kRgb ? "rgb" : "y"; }

PsnrMode psnr_mode_from_string(std::string_view name) {
  if (name == "rgb") return PsnrMode::kRgb;
  if (name == "y" || name == "Y") return PsnrMode::kLuma;
  throw ConfigError("psnr mode must be 'rgb' or 'y', got '" + std::string(name) + "'");
}

namespace {

void check_pair(const RGBImage& a, const RGBImage& b) {
  if (!a.same_shape(b)) throw DimensionError("metric inputs differ in shape");
}

std::vector<double> luminance(const RGBImage& img) {
  std::vector<double> out(img.plane_size());
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (r[i] + g[i] + b[i]) / 3.0;
  return out;
}

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    taps[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable valid-mode filtering: output is (h - 10) x (w - 10).
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w) {
  static const auto taps = gaussian_taps();
  const int oh = h - kSsimWindow + 1, ow = w - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * src[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const RGBImage& a, const RGBImage& b, PsnrMode mode) {
  check_pair(a, b);
  double sse = 0.0;
  std::size_t count = 0;
  if (mode == PsnrMode::kRgb) {
    auto va = a.values(), vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) {
      const double d = va[i] - vb[i];
      sse += d * d;
    }
    count = va.size();
  } else {
    for (std::size_t i = 0; i < a.plane_size(); ++i) {
      const double ya = 0.299 * a.plane(0)[i] + 0.587 * a.plane(1)[i] + 0.114 * a.plane(2)[i];
      const double yb = 0.299 * b.plane(0)[i] + 0.587 * b.plane(1)[i] + 0.114 * b.plane(2)[i];
      sse += (ya - yb) * (ya - yb);
    }
    count = a.plane_size();
  }
  const double mse = sse / static_cast<double>(count);
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const RGBImage& a, const RGBImage& b) {
  check_pair(a, b);
  const int h = a.height(), w = a.width();
  if (h < kSsimWindow || w < kSsimWindow) {
    throw DomainError("ssim needs images of at least " + std::to_string(kSsimWindow) + " px per side");
  }
  const std::vector<double> x = luminance(a), y = luminance(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, h, w), my = filter_valid(y, h, w);
  const auto sxx = filter_valid(xx, h, w), syy = filter_valid(yy, h, w), sxy = filter_valid(xy, h, w);
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cxy = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

}  // namespace l2rir
