#include "l2rir/losses.hpp"

#include "l2rir/checkpoint.hpp"

namespace l2rir {

using nn::Var;

void LossWeights::validate() const {
  if (!(lambda_p >= 0.0 && lambda_r >= 0.0 && lambda_per >= 0.0)) {
    throw ConfigError("loss weights must be >= 0");
  }
}

FeatureExtractor FeatureExtractor::fixed_random(std::uint64_t seed) {
  FeatureExtractor fx;
  fx.mode_ = Mode::kFixedRandom;
  fx.slope_ = nn::kLeakySlope;
  Rng rng(seed);
  const int widths[] = {3, 8, 16, 32, 64};
  for (int i = 0; i < 4; ++i) {
    Stage s;
    s.convs.push_back(nn::make_conv(fx.params_, "stage" + std::to_string(i) + ".conv0", widths[i], widths[i + 1], 3,
                                    2, rng));
    fx.stages_.push_back(std::move(s));
  }
  for (auto& p : fx.params_.items()) p.trainable = false;
  return fx;
}

FeatureExtractor FeatureExtractor::from_file(const std::filesystem::path& path) {
  Archive archive = read_archive(path);
  const auto& h = archive.header;
  if (h.value("kind", "") != "feature_extractor" || !h.contains("stages")) {
    throw ConfigError("not a feature extractor archive: " + path.string());
  }
  FeatureExtractor fx;
  fx.mode_ = Mode::kPretrainedFile;
  const auto activation = h.value("activation", std::string("relu"));
  if (activation != "relu" && activation != "leaky") throw ConfigError("activation must be relu or leaky");
  fx.slope_ = activation == "relu" ? 0.0 : nn::kLeakySlope;

  auto tensor = [&](const std::string& name) -> const Tensor& {
    for (const auto& [n, t] : archive.tensors) {
      if (n == name) return t;
    }
    throw ConfigError("feature extractor archive lacks tensor '" + name + "'");
  };
  try {
    int i = 0;
    for (const auto& stage_json : h.at("stages")) {
      Stage s;
      s.pool = stage_json.value("pool", false);
      int j = 0;
      for (const auto& conv_json : stage_json.at("convs")) {
        const std::string base = "stage" + std::to_string(i) + ".conv" + std::to_string(j);
        const Tensor& w = tensor(base + ".weight");
        const Tensor& b = tensor(base + ".bias");
        if (b.shape() != Shape{1, w.shape().n, 1, 1} || w.shape().h != w.shape().w) {
          throw ConfigError("feature extractor tensor shapes inconsistent at " + base);
        }
        nn::Conv2d conv;
        conv.weight = fx.params_.add(base + ".weight", w);
        conv.bias = fx.params_.add(base + ".bias", b);
        conv.stride = conv_json.value("stride", 1);
        conv.pad = w.shape().h / 2;
        s.convs.push_back(conv);
        ++j;
      }
      if (s.convs.empty()) throw ConfigError("feature extractor stage without convolutions");
      fx.stages_.push_back(std::move(s));
      ++i;
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed feature extractor header: ") + ex.what());
  }
  if (fx.stages_.size() != 4) throw ConfigError("feature extractor must define exactly 4 stages");
  for (auto& p : fx.params_.items()) p.trainable = false;
  return fx;
}

void FeatureExtractor::save(const std::filesystem::path& path) const {
  nlohmann::json stages = nlohmann::json::array();
  for (const Stage& s : stages_) {
    nlohmann::json convs = nlohmann::json::array();
    for (const auto& c : s.convs) convs.push_back({{"stride", c.stride}});
    stages.push_back({{"pool", s.pool}, {"convs", convs}});
  }
  nlohmann::json header = {
      {"kind", "feature_extractor"}, {"activation", slope_ == 0.0 ? "relu" : "leaky"}, {"stages", stages}};
  write_archive(path, to_archive(header, params_));
}

std::vector<Var> FeatureExtractor::operator()(const Var& x) const {
  std::vector<Var> taps;
  Var y = x;
  for (const Stage& s : stages_) {
    if (s.pool) y = nn::max_pool2x2(y);
    for (const auto& conv : s.convs) y = nn::leaky_relu(conv(y), slope_);
    taps.push_back(y);
  }
  return taps;
}

Var restoration_loss(const Var& pred, const Var& gt, const FeatureExtractor& phi, const LossWeights& w) {
  if (pred.shape() != gt.shape()) {
    throw DimensionError("restoration_loss: pred " + pred.shape().str() + " vs gt " + gt.shape().str());
  }
  Var loss = nn::mean_abs_diff(pred, gt);
  if (w.lambda_per == 0.0) return loss;
  std::vector<Var> fp = phi(pred);
  std::vector<Var> fg;
  {
    nn::NoGradGuard no_grad;
    fg = phi(Var::constant(gt.value()));
  }
  Var perceptual = nn::mean_abs_diff(fp[0], fg[0]);
  for (std::size_t l = 1; l < fp.size(); ++l) perceptual = nn::add(perceptual, nn::mean_abs_diff(fp[l], fg[l]));
  return nn::add(loss, nn::scale(perceptual, w.lambda_per));
}

Var total_loss(const Var& l_p, const Var& l_r, const LossWeights& w) {
  return nn::add(nn::scale(l_p, w.lambda_p), nn::scale(l_r, w.lambda_r));
}

double total_loss(double l_p, double l_r, const LossWeights& w) { return w.lambda_p * l_p + w.lambda_r * l_r; }

}  // namespace l2rir
