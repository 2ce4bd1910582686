#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2rir/image.hpp"

namespace l2rir {

struct SynthesisParams {
  double darken_gamma = 1.0;
  double darken_gain = 1.0;
  int n_light_patches = 0;
  double patch_radius_min = 8.0;
  double patch_radius_max = 16.0;
  double patch_boost = 1.0;
  double global_dim = 1.0;
  double noise_sigma = 0.0;  // additive Gaussian sensor noise, 0 disables
  std::uint64_t seed = 0;
};

// Throws DomainError for out-of-range fields. Radius bounds are checked
// against the image when one is supplied.
void validate(const SynthesisParams& params);
void validate(const SynthesisParams& params, int height, int width);

// Per-image parameter ranges used by build_dataset.
struct SynthesisRanges {
  double gamma_min = 1.5, gamma_max = 3.0;
  double gain_min = 0.3, gain_max = 0.6;
  int patches_min = 0, patches_max = 2;
  double boost_min = 1.5, boost_max = 3.0;
  double dim_min = 0.7, dim_max = 1.0;
  double radius_min = 8.0, radius_max = 24.0;
  double noise_sigma = 0.0;
};

// gain * img^gamma, clipped to [0,1].
RGBImage darken(const RGBImage& img, double gamma, double gain);

// Pixel factor is global_dim + (boost - global_dim) * w, with
// w = max over patches of 0.5 * (1 + cos(pi * d / R)) inside the disk and 0
// outside. Centers and radii are drawn from params.seed.
RGBImage add_light_patches(const RGBImage& img, const SynthesisParams& params);

struct LlrPair {
  RGBImage llr;
  RGBImage gt;
};

// llr = add_light_patches(darken(rainy)) plus optional noise; gt = clean.
LlrPair synthesize_pair(const RGBImage& rainy, const RGBImage& clean, const SynthesisParams& params);

enum class Split { kTrain, kTest };

struct ManifestEntry {
  std::string id;
  std::string llr;  // relative to the dataset root
  std::string gt;
  Split split = Split::kTrain;
  SynthesisParams params;
};

struct DatasetManifest {
  int version = 1;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
  std::size_t warnings = 0;  // unpaired source files skipped

  std::size_t count(Split split) const;
};

struct BuildOptions {
  SynthesisRanges ranges;
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
};

// Reads <id>_rain.png / <id>_gt.png pairs from src_dir and writes
// out_dir/{train,test}/{llr,gt}/<id>.png plus out_dir/manifest.json.
// Ground-truth files are byte copies of the sources.
// Throws IoError for a missing source directory, InsufficientDataError when no
// pair is found.
DatasetManifest build_dataset(const std::filesystem::path& src_dir,
                              const std::filesystem::path& out_dir, const BuildOptions& options);

// Draws one image's parameters from the ranges; the stream is keyed on (seed, id).
SynthesisParams sample_params(const SynthesisRanges& ranges, std::uint64_t seed,
                              const std::string& id, int height, int width);

nlohmann::json to_json(const SynthesisParams& params);
SynthesisParams synthesis_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthesisRanges& ranges);
SynthesisRanges synthesis_ranges_from_json(const nlohmann::json& j, SynthesisRanges base = {});
nlohmann::json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

std::string_view to_string(Split split);

}  // namespace l2rir
