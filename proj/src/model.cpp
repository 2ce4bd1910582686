#include "l2rir/model.hpp"

#include "l2rir/batch.hpp"
#include "l2rir/random.hpp"

namespace l2rir {

using nn::Var;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kV1: return "V1";
    case Variant::kV2: return "V2";
    case Variant::kV3: return "V3";
    case Variant::kV4: return "V4";
  }
  return "V4";
}

Variant variant_from_string(std::string_view name) {
  if (name == "V1" || name == "v1") return Variant::kV1;
  if (name == "V2" || name == "v2") return Variant::kV2;
  if (name == "V3" || name == "v3") return Variant::kV3;
  if (name == "V4" || name == "v4") return Variant::kV4;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected V1..V4)");
}

ModelConfig ModelConfig::resolved() const {
  ModelConfig c = *this;
  c.pnet.region_split = variant != Variant::kV2;
  c.rnet.use_ffr = variant == Variant::kV4;
  return c;
}

void ModelConfig::validate() const {
  pnet.validate();
  rnet.validate();
  if (pnet.depth != rnet.depth) throw ConfigError("pnet.depth must equal rnet.depth");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"variant", to_string(c.variant)},
          {"seed", c.seed},
          {"pnet",
           {{"base_channels", c.pnet.base_channels},
            {"depth", c.pnet.depth},
            {"embed_dim", c.pnet.embed_dim},
            {"mlp_hidden", c.pnet.mlp_hidden},
            {"epsilon", c.pnet.epsilon}}},
          {"rnet",
           {{"base_channels", c.rnet.base_channels},
            {"depth", c.rnet.depth},
            {"latent_injection", c.rnet.latent_injection == LatentInjection::kConcat ? "concat" : "affine"},
            {"ffr",
             {{"channels", c.rnet.ffr.channels},
              {"n_blocks", c.rnet.ffr.n_blocks},
              {"spectral_fraction", c.rnet.ffr.spectral_fraction},
              {"spectral_activation", c.rnet.ffr.spectral_activation},
              {"tied_weights", c.rnet.ffr.tied_weights}}}}}};
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c) {
  try {
    if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
    c.seed = j.value("seed", c.seed);
    if (j.contains("pnet")) {
      const auto& p = j.at("pnet");
      c.pnet.base_channels = p.value("base_channels", c.pnet.base_channels);
      c.pnet.depth = p.value("depth", c.pnet.depth);
      c.pnet.embed_dim = p.value("embed_dim", c.pnet.embed_dim);
      c.pnet.mlp_hidden = p.value("mlp_hidden", c.pnet.mlp_hidden);
      c.pnet.epsilon = p.value("epsilon", c.pnet.epsilon);
    }
    if (j.contains("rnet")) {
      const auto& r = j.at("rnet");
      c.rnet.base_channels = r.value("base_channels", c.rnet.base_channels);
      c.rnet.depth = r.value("depth", c.rnet.depth);
      if (r.contains("latent_injection")) {
        const auto mode = r.at("latent_injection").get<std::string>();
        if (mode == "concat") {
          c.rnet.latent_injection = LatentInjection::kConcat;
        } else if (mode == "affine") {
          c.rnet.latent_injection = LatentInjection::kAffine;
        } else {
          throw ConfigError("latent_injection must be 'concat' or 'affine'");
        }
      }
      if (r.contains("ffr")) {
        const auto& f = r.at("ffr");
        c.rnet.ffr.channels = f.value("channels", c.rnet.ffr.channels);
        c.rnet.ffr.n_blocks = f.value("n_blocks", c.rnet.ffr.n_blocks);
        c.rnet.ffr.spectral_fraction = f.value("spectral_fraction", c.rnet.ffr.spectral_fraction);
        c.rnet.ffr.spectral_activation = f.value("spectral_activation", c.rnet.ffr.spectral_activation);
        c.rnet.ffr.tied_weights = f.value("tied_weights", c.rnet.ffr.tied_weights);
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed model config: ") + ex.what());
  }
  return c;
}

L2RirNet::L2RirNet(const ModelConfig& config) : config_(config.resolved()) {
  config_.validate();
  Rng rng(config_.seed);
  std::vector<int> latent_channels;
  for (int level = 0; level < config_.pnet.depth; ++level) {
    latent_channels.push_back(config_.pnet.latent_channels(level));
  }
  if (config_.variant != Variant::kV1) pnet_.emplace(config_.pnet, params_, rng);
  rnet_.emplace(config_.rnet, latent_channels, params_, rng);
}

L2RirNet::Output L2RirNet::forward(const Tensor& x) const {
  Output out;
  if (pnet_) {
    PNet::Output p = pnet_->forward(Var::constant(pnet_->preprocess(x)));
    out.vectors = p.vectors;
    out.latent = std::move(p.latent);
  } else {
    out.latent = rnet_->zero_latent(x.shape());
  }
  out.restored = (*rnet_)(Var::constant(x), out.latent).restored;
  return out;
}

L2RirNet::TrainOutput L2RirNet::forward_train(const Tensor& x, const Tensor& x_aug, const Tensor& x_clean) const {
  TrainOutput out;
  if (!pnet_) {
    out.restored = (*rnet_)(Var::constant(x), rnet_->zero_latent(x.shape())).restored;
    return out;
  }
  const int n = x.shape().n;
  const double eps = config_.pnet.epsilon;
  std::vector<Var> latent;
  if (x_aug.shape() == x.shape() && x_clean.shape() == x.shape()) {
    // One encoder pass over the stacked streams; instance norm keeps samples independent.
    Var stacked = nn::concat_batch({Var::constant(pnet_->preprocess(x)), Var::constant(pnet_->preprocess(x_aug)),
                                    Var::constant(pnet_->preprocess(x_clean))});
    PNet::Encoding enc = pnet_->encode(stacked);
    Var vectors = pnet_->project(enc.scales.back());
    out.contrastive = contrastive_loss(nn::slice_batch(vectors, 0, n), nn::slice_batch(vectors, n, n),
                                       nn::slice_batch(vectors, 2 * n, n), eps);
    PNet::Encoding first;
    for (const Var& s : enc.scales) first.scales.push_back(nn::slice_batch(s, 0, n));
    latent = pnet_->decode(first);
  } else {
    PNet::Output main = pnet_->forward(Var::constant(pnet_->preprocess(x)));
    Var v_aug = pnet_->project(pnet_->encode(Var::constant(pnet_->preprocess(x_aug))).scales.back());
    Var v_clean = pnet_->project(pnet_->encode(Var::constant(pnet_->preprocess(x_clean))).scales.back());
    out.contrastive = contrastive_loss(main.vectors, v_aug, v_clean, eps);
    latent = std::move(main.latent);
  }
  out.restored = (*rnet_)(Var::constant(x), latent).restored;
  return out;
}

RGBImage reflect_pad(const RGBImage& img, int height, int width) {
  if (height < img.height() || width < img.width()) throw DimensionError("reflect_pad: target smaller than image");
  auto mirror = [](int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
  };
  RGBImage out(height, width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) out.at(c, y, x) = img.at(c, mirror(y, img.height()), mirror(x, img.width()));
    }
  }
  return out;
}

RGBImage crop(const RGBImage& img, int y0, int x0, int height, int width) {
  if (y0 < 0 || x0 < 0 || y0 + height > img.height() || x0 + width > img.width()) {
    throw BoundsError("crop window outside image");
  }
  RGBImage out(height, width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) out.at(c, y, x) = img.at(c, y0 + y, x0 + x);
    }
  }
  return out;
}

RGBImage L2RirNet::restore(const RGBImage& img) const {
  nn::NoGradGuard no_grad;
  const int f = 1 << (config_.rnet.depth - 1);
  const int h = (img.height() + f - 1) / f * f;
  const int w = (img.width() + f - 1) / f * f;
  const RGBImage padded = (h == img.height() && w == img.width()) ? img : reflect_pad(img, h, w);
  const std::vector<RGBImage> batch{padded};
  const Output out = forward(to_tensor(batch));
  const RGBImage restored = image_from_tensor(out.restored.value(), 0);
  return (h == img.height() && w == img.width()) ? restored : crop(restored, 0, 0, img.height(), img.width());
}

}  // namespace l2rir
