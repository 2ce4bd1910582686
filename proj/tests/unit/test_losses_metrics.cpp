#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "l2rir/batch.hpp"
#include "l2rir/checkpoint.hpp"
#include "l2rir/losses.hpp"
#include "l2rir/metrics.hpp"
#include "l2rir/niqe.hpp"
#include "l2rir/png_io.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

namespace l2rir {
namespace {

namespace fs = std::filesystem;
using nn::Var;
using testing::random_image;

RGBImage add_noise(const RGBImage& img, double sigma, Rng& rng) {
  RGBImage out = img;
  for (double& v : out.values()) v = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
  return out;
}

TEST(Psnr, MatchesOracle) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const int h = static_cast<int>(rng.uniform_int(8, 16)), w = static_cast<int>(rng.uniform_int(8, 16));
    const RGBImage a = random_image(h, w, rng), b = random_image(h, w, rng);
    EXPECT_NEAR(psnr(a, b), testing::oracle_psnr(a, b), 1e-9);
  }
}

TEST(Psnr, ConstantOffsetGivesTwentyDecibels) {
  const RGBImage a(6, 6, 0.5), b(6, 6, 0.6);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  EXPECT_NEAR(psnr(a, b, PsnrMode::kLuma), 20.0, 1e-9);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
  // Luma ignores chroma-only differences that cancel in Y.
  RGBImage c = a;
  c.at(0, 0, 0) = 0.5 + 0.587 * 0.1;
  c.at(1, 0, 0) = 0.5 - 0.299 * 0.1;
  EXPECT_EQ(psnr(a, c, PsnrMode::kLuma), kPsnrCap);
  EXPECT_LT(psnr(a, c), kPsnrCap);
}

TEST(Psnr, SymmetricAndMonotoneInNoise) {
  Rng rng(2);
  const RGBImage img = random_image(16, 16, rng, 0.2, 0.8);
  double previous = kPsnrCap + 1.0;
  for (double amp : {0.01, 0.03, 0.1, 0.2}) {
    RGBImage noisy = img;
    Rng local(3);
    for (double& v : noisy.values()) v += amp * (local.uniform() < 0.5 ? -1.0 : 1.0) * 0.99;
    const double p = psnr(img, noisy);
    EXPECT_EQ(p, psnr(noisy, img));
    EXPECT_LT(p, previous);
    previous = p;
  }
  EXPECT_THROW(psnr(RGBImage(4, 4), RGBImage(4, 5)), DimensionError);
  EXPECT_EQ(psnr_mode_from_string("y"), PsnrMode::kLuma);
  EXPECT_EQ(to_string(PsnrMode::kRgb), "rgb");
  EXPECT_THROW(psnr_mode_from_string("ycbcr"), ConfigError);
}

TEST(Ssim, MatchesOracle) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const int h = static_cast<int>(rng.uniform_int(11, 16)), w = static_cast<int>(rng.uniform_int(11, 16));
    const RGBImage a = random_image(h, w, rng);
    const RGBImage b = add_noise(a, 0.1, rng);
    EXPECT_NEAR(ssim(a, b), testing::oracle_ssim(a, b), 1e-9);
  }
}

TEST(Ssim, SelfNegativeAndErrors) {
  const RGBImage img = testing::make_scene(32, 32, 5);
  EXPECT_NEAR(ssim(img, img), 1.0, 1e-12);
  RGBImage inv = img;
  for (double& v : inv.values()) v = 1.0 - v;
  EXPECT_LT(ssim(img, inv), 0.5);
  Rng rng(6);
  const double mild = ssim(img, add_noise(img, 0.02, rng)), strong = ssim(img, add_noise(img, 0.2, rng));
  EXPECT_GT(mild, strong);
  EXPECT_LT(mild, 1.0);
  EXPECT_THROW(ssim(RGBImage(10, 20), RGBImage(10, 20)), DomainError);
  EXPECT_THROW(ssim(RGBImage(12, 12), RGBImage(12, 13)), DimensionError);
}

Tensor image_tensor(const RGBImage& img) { return to_tensor(std::vector<RGBImage>{img}); }

TEST(RestorationLoss, MatchesOracle) {
  const FeatureExtractor fx = FeatureExtractor::fixed_random();
  Rng rng(7);
  LossWeights w;
  for (int t = 0; t < 20; ++t) {
    const int h = static_cast<int>(rng.uniform_int(8, 16)), wd = static_cast<int>(rng.uniform_int(8, 16));
    const Tensor p = image_tensor(random_image(h, wd, rng)), g = image_tensor(random_image(h, wd, rng));
    nn::NoGradGuard guard;
    const double got = restoration_loss(Var::constant(p), Var::constant(g), fx, w).value().item();
    EXPECT_NEAR(got, testing::oracle_restoration_loss(p, g, fx, w.lambda_per), 1e-12);
  }
}

TEST(RestorationLoss, ClosedFormCases) {
  const FeatureExtractor fx = FeatureExtractor::fixed_random();
  Rng rng(8);
  const RGBImage img = random_image(16, 16, rng, 0.0, 0.8);
  RGBImage shifted = img;
  for (double& v : shifted.values()) v += 0.1;
  const Var a = Var::constant(image_tensor(img)), b = Var::constant(image_tensor(shifted));
  LossWeights w;
  EXPECT_EQ(restoration_loss(a, a, fx, w).value().item(), 0.0);
  w.lambda_per = 0.0;
  EXPECT_NEAR(restoration_loss(a, b, fx, w).value().item(), 0.1, 1e-12);
  EXPECT_THROW(restoration_loss(a, Var::constant(Tensor(Shape{1, 3, 16, 8})), fx, w), DimensionError);
}

TEST(RestorationLoss, TapsShrinkAndExtractorIsFrozen) {
  const FeatureExtractor fx = FeatureExtractor::fixed_random();
  EXPECT_EQ(fx.mode(), FeatureExtractor::Mode::kFixedRandom);
  ASSERT_EQ(fx.tap_count(), 4u);
  nn::NoGradGuard g;
  const auto taps = fx(Var::constant(Tensor(Shape{1, 3, 32, 32}, 0.5)));
  const int widths[4] = {8, 16, 32, 64};
  int prev = 32;
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(taps[i].shape().c, widths[i]);
    EXPECT_LT(taps[i].shape().h, prev);
    prev = taps[i].shape().h;
  }
  for (const auto& p : fx.parameters().items()) EXPECT_FALSE(p.trainable);
  const FeatureExtractor again = FeatureExtractor::fixed_random();
  EXPECT_EQ(again.parameters().items()[0].var.value(), fx.parameters().items()[0].var.value());
}

TEST(RestorationLoss, GradientCheckThroughPerceptualTerm) {
  const FeatureExtractor fx = FeatureExtractor::fixed_random();
  Rng rng(9);
  Var pred = Var::leaf(image_tensor(random_image(16, 16, rng)));
  const Var gt = Var::constant(image_tensor(random_image(16, 16, rng)));
  LossWeights w;
  w.lambda_per = 0.5;
  const auto r = testing::check_gradients([&] { return restoration_loss(pred, gt, fx, w); },
                                          testing::sample_probes({{"pred", pred}}, 10, rng));
  EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
}

TEST(RestorationLoss, FileExtractorRoundTripAndCustomLayout) {
  const fs::path path = fs::temp_directory_path() / "l2rir_fx.l2r";
  const FeatureExtractor fx = FeatureExtractor::fixed_random(42);
  fx.save(path);
  const FeatureExtractor loaded = FeatureExtractor::from_file(path);
  EXPECT_EQ(loaded.mode(), FeatureExtractor::Mode::kPretrainedFile);
  EXPECT_EQ(loaded.slope(), fx.slope());
  Rng rng(10);
  const Var a = Var::constant(image_tensor(random_image(16, 16, rng)));
  const Var b = Var::constant(image_tensor(random_image(16, 16, rng)));
  EXPECT_EQ(restoration_loss(a, b, loaded, {}).value().item(), restoration_loss(a, b, fx, {}).value().item());

  // Pooled ReLU layout with two convs in the first stage.
  Archive ar;
  ar.header = {{"kind", "feature_extractor"}, {"activation", "relu"}, {"stages", nlohmann::json::array()}};
  int in = 3;
  for (int s = 0; s < 4; ++s) {
    nlohmann::json stage{{"pool", s > 0}, {"convs", nlohmann::json::array()}};
    for (int c = 0; c < (s == 0 ? 2 : 1); ++c) {
      const std::string base = "stage" + std::to_string(s) + ".conv" + std::to_string(c);
      Tensor wt(Shape{4, in, 3, 3});
      for (double& v : wt.values()) v = rng.normal() * 0.3;
      ar.tensors.emplace_back(base + ".weight", wt);
      ar.tensors.emplace_back(base + ".bias", Tensor(Shape{1, 4, 1, 1}, 0.01));
      stage["convs"].push_back({{"stride", 1}});
      in = 4;
    }
    ar.header["stages"].push_back(stage);
  }
  write_archive(path, ar);
  const FeatureExtractor custom = FeatureExtractor::from_file(path);
  EXPECT_EQ(custom.slope(), 0.0);
  nn::NoGradGuard g;
  const auto taps = custom(a);
  EXPECT_EQ(taps[0].shape(), (Shape{1, 4, 16, 16}));
  EXPECT_EQ(taps[3].shape(), (Shape{1, 4, 2, 2}));

  ar.header["stages"].erase(3);
  write_archive(path, ar);
  EXPECT_THROW(FeatureExtractor::from_file(path), ConfigError);
  ar.header["kind"] = "l2rir";
  write_archive(path, ar);
  EXPECT_THROW(FeatureExtractor::from_file(path), ConfigError);
  fs::remove(path);
}

TEST(TotalLoss, WeightedSum) {
  LossWeights w;
  w.lambda_p = 0.5;
  w.lambda_r = 2.0;
  EXPECT_DOUBLE_EQ(total_loss(0.4, 0.3, w), 0.8);
  const Var t = total_loss(Var::constant(Tensor::scalar(0.4)), Var::constant(Tensor::scalar(0.3)), w);
  EXPECT_DOUBLE_EQ(t.value().item(), 0.8);
  w.lambda_per = -1.0;
  EXPECT_THROW(w.validate(), ConfigError);
}

std::vector<RGBImage> pristine_set(int n, std::uint64_t seed) {
  std::vector<RGBImage> out;
  for (int i = 0; i < n; ++i) out.push_back(testing::make_scene(192 + 32 * (i % 3), 224, seed + i));
  return out;
}

TEST(Niqe, FeatureCountsAndErrors) {
  const RGBImage img = testing::make_scene(200, 300, 11);
  const auto feats = niqe_patch_features(img, 96);
  EXPECT_EQ(feats.size(), 6u);
  const auto sharp = niqe_patch_features(img, 96, 0.75);
  EXPECT_GE(sharp.size(), 1u);
  EXPECT_LE(sharp.size(), feats.size());
  for (const auto& f : feats) {
    for (double v : f) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_THROW(niqe_patch_features(RGBImage(64, 200), 96), DomainError);
  EXPECT_THROW(niqe_patch_features(img, 95), InvalidArgumentError);
  EXPECT_THROW(fit_niqe_model(std::vector<RGBImage>{}, 96), InsufficientDataError);
}

TEST(Niqe, HeavierTailsGiveSmallerShape) {
  Rng rng(12);
  auto noise_image = [&](bool laplace) {
    RGBImage img(192, 192);
    for (int y = 0; y < 192; ++y) {
      for (int x = 0; x < 192; ++x) {
        const double u = rng.uniform(1e-12, 1.0);
        const double e = laplace ? (rng.uniform() < 0.5 ? -1.0 : 1.0) * -std::log(u) / std::sqrt(2.0) : rng.normal();
        const double v = std::clamp(0.5 + 0.05 * e, 0.0, 1.0);
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = v;
      }
    }
    return img;
  };
  const auto gauss = niqe_patch_features(noise_image(false), 96);
  const auto laplace = niqe_patch_features(noise_image(true), 96);
  ASSERT_EQ(gauss.size(), laplace.size());
  for (std::size_t i = 0; i < gauss.size(); ++i) {
    EXPECT_LT(laplace[i][0], gauss[i][0]);
    EXPECT_GT(gauss[i][1], 0.0);
  }
}

TEST(Niqe, NoiseRaisesScoreAndModelRoundTrips) {
  const NiqeModel model = fit_niqe_model(pristine_set(12, 300), 96);
  ASSERT_EQ(model.mean.size(), static_cast<std::size_t>(kNiqeFeatureDim));
  ASSERT_EQ(model.covariance.size(), static_cast<std::size_t>(kNiqeFeatureDim * kNiqeFeatureDim));
  Rng rng(13);
  const RGBImage clean = testing::make_scene(224, 224, 900);
  const double base = niqe(clean, model);
  EXPECT_LT(base, niqe(add_noise(clean, 0.1, rng), model));
  EXPECT_GE(base, 0.0);

  const fs::path path = fs::temp_directory_path() / "l2rir_niqe_model.json";
  save_niqe_model(path, model);
  const NiqeModel loaded = load_niqe_model(path);
  EXPECT_EQ(loaded.patch_size, model.patch_size);
  EXPECT_EQ(loaded.mean, model.mean);
  EXPECT_EQ(loaded.covariance, model.covariance);
  EXPECT_EQ(niqe(clean, path), base);
  {
    std::ofstream out(path);
    out << "{\"feature_dim\": 3}";
  }
  EXPECT_THROW(load_niqe_model(path), ConfigError);
  fs::remove(path);
  EXPECT_THROW(load_niqe_model(path), ConfigError);
}

TEST(Niqe, FitFromDirectory) {
  const fs::path dir = fs::temp_directory_path() / "l2rir_niqe_dir";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto imgs = pristine_set(4, 400);
  for (std::size_t i = 0; i < imgs.size(); ++i) write_png(dir / ("p" + std::to_string(i) + ".png"), imgs[i]);
  {
    std::ofstream junk(dir / "broken.png");
    junk << "not a png";
  }
  int used = 0;
  const NiqeModel m = fit_niqe_model(dir, 96, 0.75, &used);
  EXPECT_EQ(used, 4);
  EXPECT_EQ(m.mean.size(), static_cast<std::size_t>(kNiqeFeatureDim));
  fs::remove_all(dir);
  EXPECT_THROW(fit_niqe_model(dir), ConfigError);
}

}  // namespace
}  // namespace l2rir
