#include "l2rir/pnet.hpp"

#include <cmath>

#include "l2rir/batch.hpp"

namespace l2rir {

using nn::Var;

void PNetConfig::validate() const {
  if (depth < 2) throw ConfigError("pnet depth must be >= 2");
  if (base_channels < 1 || embed_dim < 1 || mlp_hidden < 1) throw ConfigError("pnet dims must be >= 1");
  if (!(epsilon > 0.0)) throw ConfigError("pnet epsilon must be > 0");
}

void check_divisible(const Shape& shape, int depth) {
  const int factor = 1 << (depth - 1);
  if (shape.h % factor != 0 || shape.w % factor != 0) {
    throw DimensionError("spatial dims " + std::to_string(shape.h) + "x" + std::to_string(shape.w) +
                         " not divisible by " + std::to_string(factor));
  }
}

PNet::PNet(const PNetConfig& config, nn::ParameterSet& params, Rng& rng, const std::string& prefix)
    : config_(config) {
  config_.validate();
  const int d = config_.depth;
  auto ch = [&](int scale) { return config_.base_channels << scale; };
  for (int i = 0; i < d; ++i) {
    const std::string name = prefix + ".enc" + std::to_string(i);
    if (i > 0) down_.push_back(nn::make_conv(params, name + ".down", ch(i - 1), ch(i), 3, 2, rng));
    enc_blocks_.push_back(nn::make_block(params, name + ".block", i == 0 ? config_.input_channels() : ch(i), ch(i), rng));
  }
  head1_ = nn::make_conv(params, prefix + ".head.fc1", ch(d - 1), config_.mlp_hidden, 1, 1, rng);
  head2_ = nn::make_conv(params, prefix + ".head.fc2", config_.mlp_hidden, config_.embed_dim, 1, 1, rng);
  for (int level = 0; level < d; ++level) {
    const int scale = d - 1 - level;
    const std::string name = prefix + ".dec" + std::to_string(level);
    if (level == 0) {
      dec_blocks_.push_back(nn::make_block(params, name + ".block", ch(scale), ch(scale), rng));
    } else {
      up_.push_back(nn::make_conv(params, name + ".up", ch(scale + 1), ch(scale), 3, 1, rng));
      dec_blocks_.push_back(nn::make_block(params, name + ".block", 2 * ch(scale), ch(scale), rng));
    }
  }
}

Tensor PNet::preprocess(const Tensor& rgb) const {
  if (rgb.shape().c != 3) throw DimensionError("pnet input must have 3 channels, got " + rgb.shape().str());
  return config_.region_split ? region_stack(rgb) : rgb;
}

PNet::Encoding PNet::encode(const Var& input) const {
  if (input.shape().c != config_.input_channels()) {
    throw DimensionError("pnet encoder expects " + std::to_string(config_.input_channels()) +
                         " channels, got " + input.shape().str());
  }
  check_divisible(input.shape(), config_.depth);
  Encoding enc;
  Var x = enc_blocks_[0](input);
  enc.scales.push_back(x);
  for (int i = 1; i < config_.depth; ++i) {
    x = nn::leaky_relu(down_[i - 1](x), nn::kLeakySlope);
    x = enc_blocks_[i](x);
    enc.scales.push_back(x);
  }
  return enc;
}

Var PNet::project(const Var& bottleneck) const {
  Var pooled = nn::global_avg_pool(bottleneck);
  return head2_(nn::leaky_relu(head1_(pooled), nn::kLeakySlope));
}

std::vector<Var> PNet::decode(const Encoding& encoding) const {
  const int d = config_.depth;
  std::vector<Var> latent;
  Var x = dec_blocks_[0](encoding.scales.back());
  latent.push_back(x);
  for (int level = 1; level < d; ++level) {
    const int scale = d - 1 - level;
    Var up = nn::leaky_relu(up_[level - 1](nn::upsample_nearest2x(x)), nn::kLeakySlope);
    x = dec_blocks_[level](nn::concat_channels({up, encoding.scales[scale]}));
    latent.push_back(x);
  }
  return latent;
}

PNet::Output PNet::forward(const Var& input) const {
  Encoding enc = encode(input);
  return {project(enc.scales.back()), decode(enc)};
}

PNet::Output PNet::forward(std::span<const RGBImage> batch) const {
  return forward(Var::constant(preprocess(to_tensor(batch))));
}

Tensor region_stack(const Tensor& rgb) {
  const Shape& s = rgb.shape();
  if (s.c != 3) throw DimensionError("region_stack expects 3 channels, got " + s.str());
  Tensor out(Shape{s.n, 6, s.h, s.w});
  const std::size_t hw = s.plane_size();
  for (int n = 0; n < s.n; ++n) {
    const double* src = rgb.sample(n);
    double* dst = out.sample(n);
    for (std::size_t i = 0; i < hw; ++i) {
      const double map = 1.0 - std::max({src[i], src[hw + i], src[2 * hw + i]});
      for (int c = 0; c < 3; ++c) {
        dst[c * hw + i] = src[c * hw + i] * (1.0 - map);
        dst[(c + 3) * hw + i] = src[c * hw + i] * map;
      }
    }
  }
  return out;
}

RGBImage apply_transform(const RGBImage& img, GeometricTransform t) {
  const int h = img.height(), w = img.width();
  const bool swap = t == GeometricTransform::kRot90 || t == GeometricTransform::kRot270;
  RGBImage out(swap ? w : h, swap ? h : w);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int oy = y, ox = x;
        switch (t) {
          case GeometricTransform::kRot90: oy = w - 1 - x; ox = y; break;
          case GeometricTransform::kRot180: oy = h - 1 - y; ox = w - 1 - x; break;
          case GeometricTransform::kRot270: oy = x; ox = h - 1 - y; break;
          case GeometricTransform::kHFlip: ox = w - 1 - x; break;
        }
        out.at(c, oy, ox) = img.at(c, y, x);
      }
    }
  }
  return out;
}

GeometricTransform draw_transform(Rng& rng) {
  return static_cast<GeometricTransform>(rng.uniform_int(0, 3));
}

RGBImage augment(const RGBImage& img, Rng& rng) { return apply_transform(img, draw_transform(rng)); }

namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || a != c) throw DimensionError("contrastive_loss: vector lengths differ");
}

double sign(double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); }

}  // namespace

double contrastive_loss(std::span<const double> v, std::span<const double> v_aug,
                        std::span<const double> v_clean, double epsilon) {
  check_lengths(v.size(), v_aug.size(), v_clean.size());
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    pos += std::abs(v[i] - v_aug[i]);
    neg += std::abs(v[i] - v_clean[i]);
  }
  return pos / (neg + epsilon);
}

ContrastiveGradient contrastive_loss_gradient(std::span<const double> v, std::span<const double> v_aug,
                                              std::span<const double> v_clean, double epsilon) {
  check_lengths(v.size(), v_aug.size(), v_clean.size());
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    pos += std::abs(v[i] - v_aug[i]);
    neg += std::abs(v[i] - v_clean[i]);
  }
  const double den = neg + epsilon;
  ContrastiveGradient g{std::vector<double>(v.size()), std::vector<double>(v.size()),
                        std::vector<double>(v.size())};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double sp = sign(v[i] - v_aug[i]);
    const double sn = sign(v[i] - v_clean[i]);
    g.v[i] = sp / den - pos * sn / (den * den);
    g.v_aug[i] = -sp / den;
    g.v_clean[i] = pos * sn / (den * den);
  }
  return g;
}

Var contrastive_loss(const Var& v, const Var& v_aug, const Var& v_clean, double epsilon) {
  if (v.shape() != v_aug.shape() || v.shape() != v_clean.shape()) {
    throw DimensionError("contrastive_loss: vector batches differ in shape");
  }
  const int batch = v.shape().n;
  const std::size_t dim = v.shape().sample_size();
  double total = 0.0;
  for (int n = 0; n < batch; ++n) {
    total += contrastive_loss({v.value().sample(n), dim}, {v_aug.value().sample(n), dim},
                              {v_clean.value().sample(n), dim}, epsilon);
  }
  return Var::from_op(Tensor::scalar(total / batch), {v, v_aug, v_clean}, [epsilon, batch, dim](nn::Node& self) {
    const double scale = self.grad.item() / batch;
    auto& a = *self.inputs[0];
    auto& b = *self.inputs[1];
    auto& c = *self.inputs[2];
    for (int n = 0; n < batch; ++n) {
      const auto g = contrastive_loss_gradient({a.value.sample(n), dim}, {b.value.sample(n), dim},
                                               {c.value.sample(n), dim}, epsilon);
      for (std::size_t i = 0; i < dim; ++i) {
        if (a.requires_grad) a.grad_buffer().sample(n)[i] += scale * g.v[i];
        if (b.requires_grad) b.grad_buffer().sample(n)[i] += scale * g.v_aug[i];
        if (c.requires_grad) c.grad_buffer().sample(n)[i] += scale * g.v_clean[i];
      }
    }
  });
}

}  // namespace l2rir
