#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "l2rir/batch.hpp"
#include "l2rir/pnet.hpp"
#include "support/gradcheck.hpp"
#include "support/scenes.hpp"

namespace l2rir {
namespace {

using nn::Var;

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

TEST(Contrastive, ZeroWhenAugmentedMatches) {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto v = random_vec(16, rng), vc = random_vec(16, rng);
    EXPECT_EQ(contrastive_loss(v, v, vc, 1e-6), 0.0);
  }
}

TEST(Contrastive, HandComputedCase) {
  const std::vector<double> v{1, 0}, va{0, 0}, vc{2, 0};
  EXPECT_EQ(contrastive_loss(v, va, vc, 0.0), 1.0);
  const std::vector<double> v3{1, 2, 3}, va3{1, 1, 1}, vc3{0, 0, 0};
  EXPECT_NEAR(contrastive_loss(v3, va3, vc3, 0.0), 3.0 / 6.0, 1e-15);
}

TEST(Contrastive, ScaleInvariantWithoutEpsilon) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    auto v = random_vec(8, rng), va = random_vec(8, rng), vc = random_vec(8, rng);
    const double base = contrastive_loss(v, va, vc, 0.0);
    const double s = rng.uniform(0.1, 10.0);
    for (auto* vec : {&v, &va, &vc}) {
      for (double& x : *vec) x *= s;
    }
    EXPECT_NEAR(contrastive_loss(v, va, vc, 0.0), base, 1e-12 * base);
  }
}

TEST(Contrastive, LengthMismatchThrows) {
  const std::vector<double> a{1, 2}, b{1, 2, 3};
  EXPECT_THROW(contrastive_loss(a, b, a, 0.0), DimensionError);
  EXPECT_THROW(contrastive_loss(a, a, b, 0.0), DimensionError);
}

TEST(Contrastive, AnalyticGradientMatchesFiniteDifferences) {
  Rng rng(3);
  const double eps = 1e-6, h = 1e-6;
  for (int t = 0; t < 5; ++t) {
    std::vector<std::vector<double>> args{random_vec(6, rng), random_vec(6, rng), random_vec(6, rng)};
    const auto g = contrastive_loss_gradient(args[0], args[1], args[2], eps);
    const std::vector<double>* grads[3] = {&g.v, &g.v_aug, &g.v_clean};
    for (int a = 0; a < 3; ++a) {
      for (std::size_t i = 0; i < 6; ++i) {
        auto up = args, down = args;
        up[a][i] += h;
        down[a][i] -= h;
        const double fd = (contrastive_loss(up[0], up[1], up[2], eps) - contrastive_loss(down[0], down[1], down[2], eps)) /
                          (2 * h);
        EXPECT_LT(testing::relative_error((*grads[a])[i], fd), 1e-6) << a << " " << i;
      }
    }
  }
}

TEST(Contrastive, BatchedVarMatchesScalarAndGradient) {
  Rng rng(4);
  const Shape s{3, 5, 1, 1};
  auto make = [&] {
    Tensor t(s);
    for (double& x : t.values()) x = rng.uniform(-1.0, 1.0);
    return Var::leaf(t);
  };
  Var v = make(), va = make(), vc = make();
  double want = 0.0;
  for (int n = 0; n < 3; ++n) {
    auto row = [&](const Var& x) { return std::vector<double>(x.value().sample(n), x.value().sample(n) + 5); };
    want += contrastive_loss(row(v), row(va), row(vc), 1e-6) / 3.0;
  }
  EXPECT_NEAR(contrastive_loss(v, va, vc, 1e-6).value().item(), want, 1e-14);
  const auto probes = testing::sample_probes({{"v", v}, {"va", va}, {"vc", vc}}, 15, rng);
  const auto r = testing::check_gradients([&] { return contrastive_loss(v, va, vc, 1e-6); }, probes);
  EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
}

TEST(Contrastive, DescentPullsTowardAugmentedAndAwayFromClean) {
  Rng rng(5);
  auto v = random_vec(8, rng), va = random_vec(8, rng), vc = random_vec(8, rng);
  auto l1 = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
  };
  const double loss0 = contrastive_loss(v, va, vc, 1e-6);
  const double to_aug0 = l1(v, va), to_clean0 = l1(v, vc);
  const auto g = contrastive_loss_gradient(v, va, vc, 1e-6);
  // Step in v only, small enough that no |.| term changes sign.
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= 1e-4 * g.v[i];
  EXPECT_LT(contrastive_loss(v, va, vc, 1e-6), loss0);
  EXPECT_TRUE(l1(v, va) < to_aug0 || l1(v, vc) > to_clean0);
}

TEST(Augment, TransformsAreGeometric) {
  Rng rng(6);
  const RGBImage img = testing::random_image(3, 5, rng);
  const RGBImage r90 = apply_transform(img, GeometricTransform::kRot90);
  ASSERT_EQ(r90.height(), 5);
  ASSERT_EQ(r90.width(), 3);
  // Counter-clockwise: the top-right corner moves to the top-left.
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(r90.at(c, 0, 0), img.at(c, 0, 4));
    EXPECT_EQ(r90.at(c, 4, 0), img.at(c, 0, 0));
    EXPECT_EQ(r90.at(c, 4, 2), img.at(c, 2, 0));
  }
  RGBImage four = img;
  for (int i = 0; i < 4; ++i) four = apply_transform(four, GeometricTransform::kRot90);
  EXPECT_EQ(four, img);
  EXPECT_EQ(apply_transform(apply_transform(img, GeometricTransform::kHFlip), GeometricTransform::kHFlip), img);
  EXPECT_EQ(apply_transform(apply_transform(img, GeometricTransform::kRot90), GeometricTransform::kRot270), img);
  EXPECT_EQ(apply_transform(apply_transform(img, GeometricTransform::kRot90), GeometricTransform::kRot90),
            apply_transform(img, GeometricTransform::kRot180));
  const RGBImage flip = apply_transform(img, GeometricTransform::kHFlip);
  EXPECT_EQ(flip.at(1, 2, 0), img.at(1, 2, 4));
}

TEST(Augment, PreservesValuesAndCoversAllTransforms) {
  Rng rng(7);
  const RGBImage img = testing::random_image(8, 8, rng);
  std::vector<double> sorted(img.values().begin(), img.values().end());
  std::sort(sorted.begin(), sorted.end());
  int seen[4] = {0, 0, 0, 0};
  for (int i = 0; i < 200; ++i) {
    seen[static_cast<int>(draw_transform(rng))]++;
    const RGBImage a = augment(img, rng);
    std::vector<double> got(a.values().begin(), a.values().end());
    std::sort(got.begin(), got.end());
    ASSERT_EQ(got, sorted);
  }
  for (int count : seen) EXPECT_GT(count, 20);
}

PNetConfig small_config() {
  PNetConfig c;
  c.base_channels = 4;
  c.depth = 3;
  c.embed_dim = 8;
  c.mlp_hidden = 12;
  return c;
}

TEST(PNet, OutputShapesAt64) {
  nn::ParameterSet params;
  Rng rng(8);
  const PNetConfig cfg = small_config();
  PNet net(cfg, params, rng);
  std::vector<RGBImage> batch{testing::make_scene(64, 64, 1), testing::make_scene(64, 64, 2)};
  nn::NoGradGuard g;
  const auto out = net.forward(batch);
  EXPECT_EQ(out.vectors.shape(), (Shape{2, 8, 1, 1}));
  ASSERT_EQ(out.latent.size(), 3u);
  const int sizes[3] = {16, 32, 64};
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(out.latent[i].shape(), (Shape{2, cfg.latent_channels(i), sizes[i], sizes[i]})) << i;
  }
  EXPECT_EQ(cfg.latent_channels(0), 16);
  EXPECT_EQ(cfg.latent_channels(2), 4);
  for (const auto& p : params.items()) EXPECT_EQ(p.name.rfind("pnet.", 0), 0u) << p.name;
}

TEST(PNet, RejectsIndivisibleInputAndBadConfig) {
  nn::ParameterSet params;
  Rng rng(9);
  PNet net(small_config(), params, rng);
  std::vector<RGBImage> batch{RGBImage(30, 32)};
  EXPECT_THROW(net.forward(batch), DimensionError);
  PNetConfig bad = small_config();
  bad.depth = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(PNet, RegionStackAndRawModes) {
  Rng rng(10);
  const RGBImage img = testing::random_image(8, 8, rng);
  std::vector<RGBImage> one{img};
  nn::ParameterSet a, b;
  PNetConfig split = small_config(), raw = small_config();
  raw.region_split = false;
  PNet ps(split, a, rng), pr(raw, b, rng);
  const Tensor stack = ps.preprocess(to_tensor(one));
  const RegionPair want = split_regions(img, compute_attention_map(img));
  EXPECT_EQ(stack.shape(), (Shape{1, 6, 8, 8}));
  for (int c = 0; c < 6; ++c) {
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) EXPECT_EQ(stack.at(0, c, y, x), want.concatenated.at(c, y, x));
    }
  }
  EXPECT_EQ(pr.preprocess(to_tensor(one)).shape(), (Shape{1, 3, 8, 8}));
}

TEST(PNet, BatchPermutationCommutes) {
  nn::ParameterSet params;
  Rng rng(11);
  PNet net(small_config(), params, rng);
  std::vector<RGBImage> batch{testing::make_scene(16, 16, 3), testing::make_scene(16, 16, 4),
                              testing::make_scene(16, 16, 5)};
  std::vector<RGBImage> permuted{batch[2], batch[0], batch[1]};
  nn::NoGradGuard g;
  const auto a = net.forward(batch), b = net.forward(permuted);
  const int map[3] = {2, 0, 1};
  for (int n = 0; n < 3; ++n) {
    for (int d = 0; d < 8; ++d) {
      EXPECT_NEAR(b.vectors.value().at(n, d, 0, 0), a.vectors.value().at(map[n], d, 0, 0), 1e-12);
    }
    for (std::size_t l = 0; l < a.latent.size(); ++l) {
      const auto& ta = a.latent[l].value();
      const auto& tb = b.latent[l].value();
      const std::size_t ss = ta.shape().sample_size();
      for (std::size_t i = 0; i < ss; ++i) EXPECT_NEAR(tb.sample(n)[i], ta.sample(map[n])[i], 1e-12);
    }
  }
}

TEST(PNet, SameSeedSameWeights) {
  nn::ParameterSet a, b;
  Rng ra(12), rb(12);
  PNet na(small_config(), a, ra), nb(small_config(), b, rb);
  ASSERT_EQ(a.items().size(), b.items().size());
  for (std::size_t i = 0; i < a.items().size(); ++i) {
    EXPECT_EQ(a.items()[i].name, b.items()[i].name);
    EXPECT_EQ(a.items()[i].var.value(), b.items()[i].var.value());
  }
}

}  // namespace
}  // namespace l2rir
