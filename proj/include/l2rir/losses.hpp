#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "l2rir/layers.hpp"

namespace l2rir {

struct LossWeights {
  double lambda_p = 1.0;
  double lambda_r = 1.0;
  double lambda_per = 0.1;

  void validate() const;
};

// Frozen multi-scale feature pyramid for the perceptual term. Each of the
// four stages ends in a tap; taps shrink strictly in spatial size.
class FeatureExtractor {
 public:
  enum class Mode { kFixedRandom, kPretrainedFile };

  static constexpr std::uint64_t kDefaultSeed = 0x5EEDF00DULL;

  // Four stride-2 3x3 conv + leaky ReLU stages (3 -> 8 -> 16 -> 32 -> 64).
  static FeatureExtractor fixed_random(std::uint64_t seed = kDefaultSeed);

  // Archive with header {"kind": "feature_extractor", "activation":
  // "relu"|"leaky", "stages": [{"pool": bool, "convs": [{"stride": s}, ...]}]}
  // and tensors "stage<i>.conv<j>.weight|bias". A stage with pool = true
  // starts with 2x2 max pooling. Throws ConfigError for malformed files.
  static FeatureExtractor from_file(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::vector<nn::Var> operator()(const nn::Var& x) const;

  Mode mode() const noexcept { return mode_; }
  std::size_t tap_count() const noexcept { return stages_.size(); }
  double slope() const noexcept { return slope_; }
  const nn::ParameterSet& parameters() const noexcept { return params_; }

 private:
  struct Stage {
    bool pool = false;
    std::vector<nn::Conv2d> convs;
  };

  FeatureExtractor() = default;

  Mode mode_ = Mode::kFixedRandom;
  double slope_ = nn::kLeakySlope;
  std::vector<Stage> stages_;
  nn::ParameterSet params_;
};

// mean|pred - gt| + lambda_per * sum_l mean|phi_l(pred) - phi_l(gt)|.
// gt carries no gradient. Throws DimensionError on shape mismatch.
nn::Var restoration_loss(const nn::Var& pred, const nn::Var& gt, const FeatureExtractor& phi, const LossWeights& w);

// lambda_p * l_p + lambda_r * l_r.
nn::Var total_loss(const nn::Var& l_p, const nn::Var& l_r, const LossWeights& w);
double total_loss(double l_p, double l_r, const LossWeights& w);

}  // namespace l2rir
