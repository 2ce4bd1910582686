#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2rir/image.hpp"
#include "l2rir/pnet.hpp"
#include "l2rir/rnet.hpp"

namespace l2rir {

// Ablation variants: V1 R-Net alone (zero latent, plain embed); V2 adds a
// single-branch degradation net; V3 the region-split P-Net; V4 adds FFR-DG.
enum class Variant { kV1, kV2, kV3, kV4 };

std::string_view to_string(Variant v);
// Throws ConfigError for unknown names.
Variant variant_from_string(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::kV4;
  PNetConfig pnet;
  RNetConfig rnet;
  std::uint64_t seed = 0;

  // Copy with variant switches applied to the sub-configs.
  ModelConfig resolved() const;
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& config);
// Missing keys keep their defaults. Throws ConfigError on malformed values.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

class L2RirNet {
 public:
  explicit L2RirNet(const ModelConfig& config);
  L2RirNet(const L2RirNet&) = delete;
  L2RirNet& operator=(const L2RirNet&) = delete;

  struct Output {
    nn::Var restored;
    std::optional<nn::Var> vectors;
    std::vector<nn::Var> latent;
  };
  // P-Net on x, then R-Net on (x, latent). x is N x 3 x H x W.
  Output forward(const Tensor& x) const;

  struct TrainOutput {
    nn::Var restored;
    std::optional<nn::Var> contrastive;  // L_P; absent for V1
  };
  // Three weight-shared P-Net streams plus the restoration pass on x.
  TrainOutput forward_train(const Tensor& x, const Tensor& x_aug, const Tensor& x_clean) const;

  // Inference without graph recording. Images of any size are reflect-padded
  // to the divisibility contract and cropped back.
  RGBImage restore(const RGBImage& img) const;

  bool has_pnet() const noexcept { return pnet_.has_value(); }
  const PNet& pnet() const { return *pnet_; }
  const RNet& rnet() const { return *rnet_; }
  const ModelConfig& config() const noexcept { return config_; }
  nn::ParameterSet& parameters() noexcept { return params_; }
  const nn::ParameterSet& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const { return params_.scalar_count(); }

 private:
  ModelConfig config_;
  nn::ParameterSet params_;
  std::optional<PNet> pnet_;
  std::optional<RNet> rnet_;
};

// Mirror padding (edge pixel not repeated) to the given size.
RGBImage reflect_pad(const RGBImage& img, int height, int width);
RGBImage crop(const RGBImage& img, int y0, int x0, int height, int width);

}  // namespace l2rir
