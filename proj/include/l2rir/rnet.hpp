#pragma once

#include <optional>
#include <string>
#include <vector>

#include "l2rir/ffr_dg.hpp"
#include "l2rir/layers.hpp"

namespace l2rir {

enum class LatentInjection { kConcat, kAffine };

struct RNetConfig {
  int base_channels = 16;
  int depth = 3;
  LatentInjection latent_injection = LatentInjection::kConcat;
  // false: guidance comes from a plain 3x3 conv embed instead of FFR-DG.
  bool use_ffr = true;
  FFRConfig ffr;

  void validate() const;
};

struct RestorationOutput {
  nn::Var restored;                 // N x 3 x H x W, clamped to [0,1]
  std::optional<nn::Var> guidance;  // FFR-DG (or plain embed) features
};

// U-Net restorer. Decoder level i (coarsest first) fuses its inputs with
// latent level i before the conv block; the output is clamp(llr + head).
class RNet {
 public:
  // latent_channels[i] gives the channel count of latent level i.
  RNet(const RNetConfig& config, const std::vector<int>& latent_channels, nn::ParameterSet& params, Rng& rng,
       const std::string& prefix = "rnet");

  // Throws DimensionError when the pyramid does not match the decoder scales.
  RestorationOutput operator()(const nn::Var& llr, const std::vector<nn::Var>& latent) const;

  // All-zero pyramid matching the decoder scales for an input of shape `input`.
  std::vector<nn::Var> zero_latent(const Shape& input) const;

  const RNetConfig& config() const noexcept { return config_; }

 private:
  nn::Var inject(int level, const std::vector<nn::Var>& parts, const nn::Var& latent) const;

  RNetConfig config_;
  std::vector<int> latent_channels_;
  std::optional<FfrDg> ffr_;
  nn::Conv2d plain_embed_;
  std::vector<nn::ConvBlock> enc_blocks_;
  std::vector<nn::Conv2d> down_;
  std::vector<nn::Conv2d> up_;
  std::vector<nn::Conv2d> fuse_;
  std::vector<nn::Conv2d> affine_;
  std::vector<nn::ConvBlock> dec_blocks_;
  nn::Conv2d head_;
};

// Detail images (|r-g|, |r-b|, |g-b|) of every sample in an RGB batch.
Tensor detail_stack(const Tensor& rgb);

}  // namespace l2rir
