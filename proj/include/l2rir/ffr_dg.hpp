#pragma once

#include <string>
#include <vector>

#include "l2rir/layers.hpp"

namespace l2rir {

struct FFRConfig {
  int channels = 16;
  int n_blocks = 2;
  double spectral_fraction = 0.5;
  bool spectral_activation = true;
  // Detail and LLR streams share embed and block weights.
  bool tied_weights = false;

  void validate() const;
  int spectral_channels() const;
  int spatial_channels() const { return channels - spectral_channels(); }
};

// rfft2 -> 1x1 conv over stacked (re, im) channels -> leaky ReLU -> irfft2.
class SpectralTransform {
 public:
  SpectralTransform() = default;
  SpectralTransform(nn::ParameterSet& params, const std::string& name, int channels, bool activation, Rng& rng);

  // Shape-preserving. Throws DimensionError for odd spatial dims or a
  // channel count other than the configured one.
  nn::Var operator()(const nn::Var& x) const;

  // Frequency conv becomes the identity map (weights I, bias 0).
  void set_identity();
  const nn::Conv2d& frequency_conv() const noexcept { return freq_conv_; }
  void set_activation(bool on) noexcept { activation_ = on; }

 private:
  int channels_ = 0;
  bool activation_ = true;
  nn::Conv2d freq_conv_;
};

// Split-channel residual block: spatial slice through two 3x3 convs,
// spectral slice through SpectralTransform, concatenated plus the input.
class FfrBlock {
 public:
  FfrBlock() = default;
  FfrBlock(nn::ParameterSet& params, const std::string& name, const FFRConfig& config, Rng& rng);

  nn::Var operator()(const nn::Var& x) const;

  SpectralTransform& spectral() noexcept { return spectral_; }
  const nn::Conv2d& spatial_conv1() const noexcept { return spatial1_; }
  const nn::Conv2d& spatial_conv2() const noexcept { return spatial2_; }

 private:
  int channels_ = 0;
  int spatial_channels_ = 0;
  nn::Conv2d spatial1_, spatial2_;
  SpectralTransform spectral_;
};

struct FfrDgOutput {
  nn::Var guidance;        // N x channels x H x W
  nn::Var enhanced;        // detail_features * llr_features
  nn::Var llr_features;
};

class FfrDg {
 public:
  FfrDg(const FFRConfig& config, nn::ParameterSet& params, Rng& rng, const std::string& prefix = "ffr_dg");

  // llr and detail are N x 3 x H x W. Throws DimensionError on shape mismatch.
  FfrDgOutput operator()(const nn::Var& llr, const nn::Var& detail) const;

  const FFRConfig& config() const noexcept { return config_; }

 private:
  struct Stream {
    nn::Conv2d embed;
    std::vector<FfrBlock> blocks;
    nn::Var run(const nn::Var& x) const;
  };

  FFRConfig config_;
  Stream llr_stream_;
  Stream detail_stream_;
  nn::Conv2d fuse_;
};

}  // namespace l2rir
