#pragma once

#include <string_view>

#include "l2rir/image.hpp"

namespace l2rir {

enum class PsnrMode { kRgb, kLuma };

std::string_view to_string(PsnrMode mode);
// Accepts "rgb" or "y". Throws ConfigError otherwise.
PsnrMode psnr_mode_from_string(std::string_view name);

inline constexpr double kPsnrCap = 100.0;

// 10 log10(1 / MSE) with peak 1. kRgb averages the squared error over all
// three channels jointly; kLuma uses Y = 0.299 r + 0.587 g + 0.114 b.
// Identical inputs map to kPsnrCap. Throws DimensionError on shape mismatch.
double psnr(const RGBImage& a, const RGBImage& b, PsnrMode mode = PsnrMode::kRgb);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

// Mean local SSIM on (r+g+b)/3 over every fully contained 11x11 Gaussian
// window, K1 = 0.01, K2 = 0.03. Throws DomainError when either side is
// shorter than the window, DimensionError on shape mismatch.
double ssim(const RGBImage& a, const RGBImage& b);

}  // namespace l2rir
