#pragma once

#include <span>
#include <string>
#include <vector>

#include "l2rir/image.hpp"
#include "l2rir/layers.hpp"

namespace l2rir {

struct PNetConfig {
  int base_channels = 16;
  int depth = 3;
  int embed_dim = 128;
  int mlp_hidden = 256;
  double epsilon = 1e-6;  // contrastive-loss denominator stabilizer
  // false: the encoder sees the raw RGB image (single-branch ablation)
  bool region_split = true;

  void validate() const;
  int input_channels() const { return region_split ? 6 : 3; }
  // Channels of latent level `level`, coarsest level first.
  int latent_channels(int level) const { return base_channels << (depth - 1 - level); }
};

// Degradation-vector extractor: U-Net encoder over the dark/light region
// stack, two-layer projection head on the pooled bottleneck, decoder emitting
// the latent pyramid.
class PNet {
 public:
  PNet(const PNetConfig& config, nn::ParameterSet& params, Rng& rng, const std::string& prefix = "pnet");

  struct Encoding {
    std::vector<nn::Var> scales;  // scales[i] at 1/2^i resolution; back() is the bottleneck
  };
  struct Output {
    nn::Var vectors;               // N x embed_dim x 1 x 1
    std::vector<nn::Var> latent;   // level i at input / 2^(depth-1-i)
  };

  // Region stack (or raw copy for region_split = false) of an RGB batch.
  Tensor preprocess(const Tensor& rgb) const;

  Encoding encode(const nn::Var& input) const;
  nn::Var project(const nn::Var& bottleneck) const;
  std::vector<nn::Var> decode(const Encoding& encoding) const;

  // Full pass on a preprocessed input tensor.
  Output forward(const nn::Var& input) const;
  // Preprocesses and runs an RGB batch. Throws DimensionError when spatial
  // dims are not divisible by 2^(depth-1).
  Output forward(std::span<const RGBImage> batch) const;

  const PNetConfig& config() const noexcept { return config_; }

 private:
  PNetConfig config_;
  std::vector<nn::ConvBlock> enc_blocks_;
  std::vector<nn::Conv2d> down_;
  nn::Conv2d head1_, head2_;
  std::vector<nn::ConvBlock> dec_blocks_;
  std::vector<nn::Conv2d> up_;
};

// P_en = concat(img * (1 - MAP), img * MAP) for every sample of an RGB batch.
Tensor region_stack(const Tensor& rgb);

// Throws DimensionError unless height and width are divisible by 2^(depth-1).
void check_divisible(const Shape& shape, int depth);

enum class GeometricTransform { kRot90, kRot180, kRot270, kHFlip };

// Rotations are counter-clockwise.
RGBImage apply_transform(const RGBImage& img, GeometricTransform t);
GeometricTransform draw_transform(Rng& rng);
RGBImage augment(const RGBImage& img, Rng& rng);

// |v - v_aug|_1 / (|v - v_clean|_1 + epsilon).
// Throws DimensionError on length mismatch.
double contrastive_loss(std::span<const double> v, std::span<const double> v_aug,
                        std::span<const double> v_clean, double epsilon);

struct ContrastiveGradient {
  std::vector<double> v, v_aug, v_clean;
};
ContrastiveGradient contrastive_loss_gradient(std::span<const double> v, std::span<const double> v_aug,
                                              std::span<const double> v_clean, double epsilon);

// Batched form on N x D x 1 x 1 vectors; mean of per-sample losses.
nn::Var contrastive_loss(const nn::Var& v, const nn::Var& v_aug, const nn::Var& v_clean, double epsilon);

}  // namespace l2rir
