#include "l2rir/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace l2rir {
namespace {

RayDirection resolve_direction(int height, int width, std::optional<RayDirection> direction) {
  RayDirection d = direction.value_or(width >= height ? RayDirection{1.0, 0.0} : RayDirection{0.0, 1.0});
  const double norm = std::hypot(d.dx, d.dy);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InvalidArgumentError("ray direction must be a non-zero finite vector");
  }
  return {d.dx / norm, d.dy / norm};
}

void check_center(int height, int width, PixelPoint center) {
  if (!(center.x >= 0.0 && center.y >= 0.0 && center.x <= width - 1 && center.y <= height - 1)) {
    throw BoundsError("probe center lies outside the image");
  }
}

struct RayPixel {
  int x;
  int y;
};

// Pixels visited along the line through the center, both directions,
// duplicates removed. The center pixel comes first.
std::vector<RayPixel> walk_ray(int height, int width, PixelPoint center, RayDirection dir,
                               double step) {
  std::vector<RayPixel> pixels;
  for (int sign : {1, -1}) {
    int last_x = std::numeric_limits<int>::min(), last_y = std::numeric_limits<int>::min();
    for (int k = sign == 1 ? 0 : 1;; ++k) {
      const double t = sign * k * step;
      const int x = static_cast<int>(std::lround(center.x + t * dir.dx));
      const int y = static_cast<int>(std::lround(center.y + t * dir.dy));
      if (x < 0 || y < 0 || x >= width || y >= height) break;
      if (x == last_x && y == last_y) continue;
      last_x = x;
      last_y = y;
      pixels.push_back({x, y});
    }
  }
  return pixels;
}

}  // namespace

LightProfile fit_inverse_square(const RGBImage& img, PixelPoint center, const FitOptions& options) {
  check_center(img.height(), img.width(), center);
  const RayDirection dir = resolve_direction(img.height(), img.width(), options.direction);
  const int h = img.height(), w = img.width();

  LightProfile profile;
  profile.center = center;
  double num = 0.0, den = 0.0;
  std::vector<std::pair<double, double>> fitted;  // (E, u)
  for (const RayPixel& p : walk_ray(h, w, center, dir, 1.0)) {
    double e_sum = 0.0, u_sum = 0.0;
    int count = 0;
    bool singular = false;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = p.x + dx, y = p.y + dy;
        if (x < 0 || y < 0 || x >= w || y >= h) continue;
        e_sum += (img.at(0, y, x) + img.at(1, y, x) + img.at(2, y, x)) / 3.0;
        const double d2 = (x - center.x) * (x - center.x) + (y - center.y) * (y - center.y);
        if (d2 == 0.0) {
          singular = true;
        } else {
          u_sum += 1.0 / d2;
        }
        ++count;
      }
    }
    const double r = std::hypot(p.x - center.x, p.y - center.y);
    const double e = e_sum / count;
    profile.samples.push_back({r, e});
    if (singular || r < options.r_min || e >= options.clip_level) continue;
    const double u = u_sum / count;
    num += e * u;
    den += u * u;
    fitted.emplace_back(e, u);
  }
  if (fitted.empty() || den == 0.0) {
    throw InsufficientDataError("no ray samples beyond r_min below the clip level");
  }
  profile.e0 = num / den;
  double sq = 0.0, energy = 0.0;
  for (auto [e, u] : fitted) {
    const double diff = e - profile.e0 * u;
    sq += diff * diff;
    energy += e * e;
  }
  profile.residual = energy > 0.0 ? std::sqrt(sq / energy) : 0.0;
  profile.point_source = energy > 0.0 && profile.residual < options.residual_threshold;
  profile.fitted_samples = fitted.size();
  return profile;
}

RainDensityProfile rain_density_profile(const GrayMap& mask, PixelPoint center, int patch_size,
                                        std::optional<RayDirection> direction) {
  if (patch_size < 1) throw InvalidArgumentError("patch_size must be >= 1");
  check_center(mask.height(), mask.width(), center);
  const RayDirection dir = resolve_direction(mask.height(), mask.width(), direction);
  const int h = mask.height(), w = mask.width();

  RainDensityProfile profile;
  profile.patch_size = patch_size;
  const double area = static_cast<double>(patch_size) * patch_size;
  for (const RayPixel& p : walk_ray(h, w, center, dir, patch_size)) {
    const int x0 = p.x - patch_size / 2, y0 = p.y - patch_size / 2;
    if (x0 < 0 || y0 < 0 || x0 + patch_size > w || y0 + patch_size > h) continue;
    int rain = 0;
    for (int y = y0; y < y0 + patch_size; ++y) {
      for (int x = x0; x < x0 + patch_size; ++x) {
        if (mask.at(0, y, x) >= 0.5) ++rain;
      }
    }
    profile.samples.push_back({std::hypot(p.x - center.x, p.y - center.y), rain / area});
  }
  if (profile.samples.empty()) {
    throw InsufficientDataError("every rain-density patch crosses the image border");
  }
  std::sort(profile.samples.begin(), profile.samples.end(),
            [](const RainSample& a, const RainSample& b) { return a.r < b.r; });
  return profile;
}

RadiusRegion classify_radius(double r, const RadiusBreakpoints& breakpoints) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("radius must be finite and >= 0");
  if (r < breakpoints.overexposed_end) return RadiusRegion::kOverexposed;
  if (r < breakpoints.rain_end) return RadiusRegion::kRainDominated;
  return RadiusRegion::kLowlightDominated;
}

std::string_view to_string(RadiusRegion region) {
  switch (region) {
    case RadiusRegion::kOverexposed:
      return "overexposed";
    case RadiusRegion::kRainDominated:
      return "rain-dominated";
    case RadiusRegion::kLowlightDominated:
      return "lowlight-dominated";
  }
  return "unknown";
}

}  // namespace l2rir
