#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "l2rir/image.hpp"

namespace l2rir {

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

// Unit-free ray direction; normalized internally. Sampling walks both ways
// along the line through the center.
struct RayDirection {
  double dx = 1.0;
  double dy = 0.0;
};

struct LightSample {
  double r = 0.0;  // distance to the center in pixels
  double e = 0.0;  // 3x3 mean of (r+g+b)/3
};

struct LightProfile {
  PixelPoint center;
  double e0 = 0.0;
  // Relative RMS misfit sqrt(sum (E - E0 u)^2 / sum E^2) over fitted samples.
  double residual = 0.0;
  bool point_source = false;
  std::vector<LightSample> samples;  // every sample on the ray
  std::size_t fitted_samples = 0;
};

struct FitOptions {
  double r_min = 5.0;
  double clip_level = 0.99;
  double residual_threshold = 0.1;
  std::optional<RayDirection> direction;  // defaults to the image's longer axis
};

// Least-squares fit of E = E0 / r^2 along a line through `center`. The model
// basis is smoothed with the same 3x3 window as the measurement, so noiseless
// inverse-square renders are recovered exactly.
// Throws BoundsError when the center lies outside the image and
// InsufficientDataError when no sample survives the r_min / clip filters.
LightProfile fit_inverse_square(const RGBImage& img, PixelPoint center,
                                const FitOptions& options = {});

struct RainSample {
  double r = 0.0;
  double m = 0.0;  // rain pixels / patch area
};

struct RainDensityProfile {
  int patch_size = 20;
  std::vector<RainSample> samples;
};

// Square patches centered on the ray at steps of patch_size. Mask values
// >= 0.5 count as rain. Patches crossing the border are skipped.
// Throws InvalidArgumentError for patch_size < 1 and InsufficientDataError
// when every patch is skipped.
RainDensityProfile rain_density_profile(const GrayMap& mask, PixelPoint center, int patch_size = 20,
                                        std::optional<RayDirection> direction = std::nullopt);

enum class RadiusRegion { kOverexposed, kRainDominated, kLowlightDominated };

struct RadiusBreakpoints {
  double overexposed_end = 200.0;
  double rain_end = 900.0;
};

// [0, 200) overexposed, [200, 900) rain-dominated, [900, inf) low-light.
// Throws DomainError for negative or non-finite radii.
RadiusRegion classify_radius(double r, const RadiusBreakpoints& breakpoints = {});

std::string_view to_string(RadiusRegion region);

}  // namespace l2rir
