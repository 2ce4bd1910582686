#include "l2rir/ffr_dg.hpp"

#include <cmath>

namespace l2rir {

using nn::Var;

void FFRConfig::validate() const {
  if (channels < 2) throw ConfigError("ffr channels must be >= 2");
  if (n_blocks < 0) throw ConfigError("ffr n_blocks must be >= 0");
  if (!(spectral_fraction > 0.0 && spectral_fraction < 1.0)) {
    throw ConfigError("ffr spectral_fraction must lie in (0,1)");
  }
  const double split = channels * spectral_fraction;
  if (std::abs(split - std::round(split)) > 1e-9 || std::round(split) < 1 || std::round(split) >= channels) {
    throw ConfigError("channels * spectral_fraction must be an integer in [1, channels)");
  }
}

int FFRConfig::spectral_channels() const {
  return static_cast<int>(std::lround(channels * spectral_fraction));
}

SpectralTransform::SpectralTransform(nn::ParameterSet& params, const std::string& name, int channels,
                                     bool activation, Rng& rng)
    : channels_(channels),
      activation_(activation),
      freq_conv_(nn::make_conv(params, name + ".freq_conv", 2 * channels, 2 * channels, 1, 1, rng)) {}

Var SpectralTransform::operator()(const Var& x) const {
  if (x.shape().c != channels_) {
    throw DimensionError("spectral transform expects " + std::to_string(channels_) + " channels, got " +
                         x.shape().str());
  }
  Var y = freq_conv_(nn::rfft2(x));
  if (activation_) y = nn::leaky_relu(y, nn::kLeakySlope);
  return nn::irfft2(y, x.shape().w);
}

void SpectralTransform::set_identity() {
  Tensor& w = freq_conv_.weight.mutable_value();
  w.fill(0.0);
  for (int i = 0; i < 2 * channels_; ++i) w.at(i, i, 0, 0) = 1.0;
  freq_conv_.bias.mutable_value().fill(0.0);
}

FfrBlock::FfrBlock(nn::ParameterSet& params, const std::string& name, const FFRConfig& config, Rng& rng)
    : channels_(config.channels), spatial_channels_(config.spatial_channels()) {
  spatial1_ = nn::make_conv(params, name + ".spatial1", spatial_channels_, spatial_channels_, 3, 1, rng);
  spatial2_ = nn::make_conv(params, name + ".spatial2", spatial_channels_, spatial_channels_, 3, 1, rng);
  spectral_ = SpectralTransform(params, name + ".spectral", config.spectral_channels(),
                                config.spectral_activation, rng);
}

Var FfrBlock::operator()(const Var& x) const {
  if (x.shape().c != channels_) {
    throw DimensionError("ffr block expects " + std::to_string(channels_) + " channels, got " + x.shape().str());
  }
  Var spatial = nn::slice_channels(x, 0, spatial_channels_);
  Var spectral = nn::slice_channels(x, spatial_channels_, channels_ - spatial_channels_);
  spatial = nn::leaky_relu(spatial1_(spatial), nn::kLeakySlope);
  spatial = nn::leaky_relu(spatial2_(spatial), nn::kLeakySlope);
  return nn::add(nn::concat_channels({spatial, spectral_(spectral)}), x);
}

Var FfrDg::Stream::run(const Var& x) const {
  Var y = embed(x);
  for (const FfrBlock& b : blocks) y = b(y);
  return y;
}

FfrDg::FfrDg(const FFRConfig& config, nn::ParameterSet& params, Rng& rng, const std::string& prefix)
    : config_(config) {
  config_.validate();
  auto make_stream = [&](const std::string& name) {
    Stream s;
    s.embed = nn::make_conv(params, prefix + "." + name + ".embed", 3, config_.channels, 3, 1, rng);
    for (int i = 0; i < config_.n_blocks; ++i) {
      s.blocks.emplace_back(params, prefix + "." + name + ".block" + std::to_string(i), config_, rng);
    }
    return s;
  };
  llr_stream_ = make_stream("llr");
  detail_stream_ = config_.tied_weights ? llr_stream_ : make_stream("detail");
  fuse_ = nn::make_conv(params, prefix + ".fuse", 2 * config_.channels, config_.channels, 1, 1, rng);
}

FfrDgOutput FfrDg::operator()(const Var& llr, const Var& detail) const {
  if (llr.shape() != detail.shape()) {
    throw DimensionError("ffr_dg: llr " + llr.shape().str() + " and detail " + detail.shape().str() + " differ");
  }
  FfrDgOutput out;
  out.llr_features = llr_stream_.run(llr);
  Var detail_features = detail_stream_.run(detail);
  out.enhanced = nn::mul(detail_features, out.llr_features);
  out.guidance = fuse_(nn::concat_channels({out.enhanced, out.llr_features}));
  return out;
}

}  // namespace l2rir
