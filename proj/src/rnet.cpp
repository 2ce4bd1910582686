#include "l2rir/rnet.hpp"

#include <cmath>

#include "l2rir/pnet.hpp"

namespace l2rir {

using nn::Var;

void RNetConfig::validate() const {
  if (depth < 2) throw ConfigError("rnet depth must be >= 2");
  if (base_channels < 1) throw ConfigError("rnet base_channels must be >= 1");
  ffr.validate();
}

Tensor detail_stack(const Tensor& rgb) {
  const Shape& s = rgb.shape();
  if (s.c != 3) throw DimensionError("detail_stack expects 3 channels, got " + s.str());
  Tensor out(s);
  const std::size_t hw = s.plane_size();
  for (int n = 0; n < s.n; ++n) {
    const double* r = rgb.sample(n);
    const double* g = r + hw;
    const double* b = g + hw;
    double* o = out.sample(n);
    for (std::size_t i = 0; i < hw; ++i) {
      o[i] = std::abs(r[i] - g[i]);
      o[hw + i] = std::abs(r[i] - b[i]);
      o[2 * hw + i] = std::abs(g[i] - b[i]);
    }
  }
  return out;
}

RNet::RNet(const RNetConfig& config, const std::vector<int>& latent_channels, nn::ParameterSet& params,
           Rng& rng, const std::string& prefix)
    : config_(config), latent_channels_(latent_channels) {
  config_.validate();
  const int d = config_.depth;
  if (static_cast<int>(latent_channels_.size()) != d) {
    throw DimensionError("rnet expects one latent level per decoder scale");
  }
  auto ch = [&](int scale) { return config_.base_channels << scale; };
  const int guide = config_.ffr.channels;
  if (config_.use_ffr) {
    ffr_.emplace(config_.ffr, params, rng);
  } else {
    plain_embed_ = nn::make_conv(params, prefix + ".embed", 3, guide, 3, 1, rng);
  }
  for (int i = 0; i < d; ++i) {
    const std::string name = prefix + ".enc" + std::to_string(i);
    if (i > 0) down_.push_back(nn::make_conv(params, name + ".down", ch(i - 1), ch(i), 3, 2, rng));
    enc_blocks_.push_back(nn::make_block(params, name + ".block", i == 0 ? guide + 3 : ch(i), ch(i), rng));
  }
  for (int level = 0; level < d; ++level) {
    const int scale = d - 1 - level;
    const std::string name = prefix + ".dec" + std::to_string(level);
    int parts = ch(scale);
    if (level > 0) {
      up_.push_back(nn::make_conv(params, name + ".up", ch(scale + 1), ch(scale), 3, 1, rng));
      parts = 2 * ch(scale);
    }
    if (config_.latent_injection == LatentInjection::kConcat) {
      fuse_.push_back(nn::make_conv(params, name + ".fuse", parts + latent_channels_[level], ch(scale), 1, 1, rng));
    } else {
      fuse_.push_back(nn::make_conv(params, name + ".fuse", parts, ch(scale), 1, 1, rng));
      affine_.push_back(nn::make_conv(params, name + ".affine", latent_channels_[level], 2 * ch(scale), 1, 1, rng, 0.1));
    }
    dec_blocks_.push_back(nn::make_block(params, name + ".block", ch(scale), ch(scale), rng));
  }
  head_ = nn::make_conv(params, prefix + ".head", ch(0), 3, 3, 1, rng, 0.1);
}

std::vector<Var> RNet::zero_latent(const Shape& input) const {
  std::vector<Var> latent;
  const int d = config_.depth;
  for (int level = 0; level < d; ++level) {
    const int f = 1 << (d - 1 - level);
    latent.push_back(Var::constant(Tensor(Shape{input.n, latent_channels_[level], input.h / f, input.w / f}, 0.0)));
  }
  return latent;
}

Var RNet::inject(int level, const std::vector<Var>& parts, const Var& latent) const {
  if (config_.latent_injection == LatentInjection::kConcat) {
    std::vector<Var> all = parts;
    all.push_back(latent);
    return fuse_[level](nn::concat_channels(all));
  }
  Var x = fuse_[level](parts.size() == 1 ? parts[0] : nn::concat_channels(parts));
  Var affine = affine_[level](latent);
  const int c = x.shape().c;
  Var gain = nn::slice_channels(affine, 0, c);
  Var shift = nn::slice_channels(affine, c, c);
  return nn::add(nn::add(x, nn::mul(x, gain)), shift);
}

RestorationOutput RNet::operator()(const Var& llr, const std::vector<Var>& latent) const {
  const int d = config_.depth;
  const Shape& s = llr.shape();
  if (s.c != 3) throw DimensionError("rnet input must have 3 channels, got " + s.str());
  check_divisible(s, d);
  if (static_cast<int>(latent.size()) != d) throw DimensionError("latent pyramid depth mismatch");
  for (int level = 0; level < d; ++level) {
    const int f = 1 << (d - 1 - level);
    const Shape expect{s.n, latent_channels_[level], s.h / f, s.w / f};
    if (latent[level].shape() != expect) {
      throw DimensionError("latent level " + std::to_string(level) + " has shape " + latent[level].shape().str() +
                           ", expected " + expect.str());
    }
  }

  RestorationOutput out;
  Var guidance;
  if (ffr_) {
    guidance = (*ffr_)(llr, Var::constant(detail_stack(llr.value()))).guidance;
  } else {
    guidance = nn::leaky_relu(plain_embed_(llr), nn::kLeakySlope);
  }
  out.guidance = guidance;

  std::vector<Var> skips;
  Var x = enc_blocks_[0](nn::concat_channels({guidance, llr}));
  skips.push_back(x);
  for (int i = 1; i < d; ++i) {
    x = enc_blocks_[i](nn::leaky_relu(down_[i - 1](x), nn::kLeakySlope));
    skips.push_back(x);
  }
  x = dec_blocks_[0](inject(0, {x}, latent[0]));
  for (int level = 1; level < d; ++level) {
    const int scale = d - 1 - level;
    Var up = nn::leaky_relu(up_[level - 1](nn::upsample_nearest2x(x)), nn::kLeakySlope);
    x = dec_blocks_[level](inject(level, {up, skips[scale]}, latent[level]));
  }
  out.restored = nn::clamp(nn::add(llr, head_(x)), 0.0, 1.0);
  return out;
}

}  // namespace l2rir
