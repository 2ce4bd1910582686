#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "l2rir/image.hpp"

namespace l2rir {

inline constexpr int kNiqeFeatureDim = 36;
inline constexpr int kNiqePatchSize = 96;

using NiqeFeatures = std::array<double, kNiqeFeatureDim>;

// Pristine multivariate Gaussian of natural-scene features.
// JSON form: {"feature_dim": 36, "patch_size": 96, "mean": [36],
// "covariance": [[36] x 36]}.
struct NiqeModel {
  int patch_size = kNiqePatchSize;
  std::vector<double> mean;        // feature_dim
  std::vector<double> covariance;  // feature_dim x feature_dim, row-major
};

// Per-patch features at two scales (18 each: GGD shape and variance of the
// MSCN map, then AGGD shape, mean, left and right variance for the four
// neighbour products). When sharpness_threshold > 0 only patches whose mean
// local deviation exceeds threshold * max over the image are kept.
// Throws DomainError when the image is smaller than one patch.
std::vector<NiqeFeatures> niqe_patch_features(const RGBImage& img, int patch_size = kNiqePatchSize,
                                              double sharpness_threshold = 0.0);

// Throws InsufficientDataError when fewer than two patches survive.
NiqeModel fit_niqe_model(std::span<const RGBImage> pristine, int patch_size = kNiqePatchSize,
                         double sharpness_threshold = 0.75);
// Fits from every readable PNG in dir; returns the model and the number of
// images used through used_images when non-null.
NiqeModel fit_niqe_model(const std::filesystem::path& dir, int patch_size = kNiqePatchSize,
                         double sharpness_threshold = 0.75, int* used_images = nullptr);

void save_niqe_model(const std::filesystem::path& path, const NiqeModel& model);
// Throws ConfigError for a missing or malformed file.
NiqeModel load_niqe_model(const std::filesystem::path& path);

// sqrt((m1 - m2)^T pinv((S1 + S2) / 2) (m1 - m2)); lower is better.
double niqe(const RGBImage& img, const NiqeModel& model);
double niqe(const RGBImage& img, const std::filesystem::path& model_file);

}  // namespace l2rir
