#include "l2rir/niqe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "l2rir/png_io.hpp"

namespace l2rir {

namespace fs = std::filesystem;

namespace {

struct Plane {
  int h = 0;
  int w = 0;
  std::vector<double> v;
  double operator()(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane gray255(const RGBImage& img) {
  Plane p{img.height(), img.width(), std::vector<double>(img.plane_size())};
  for (std::size_t i = 0; i < p.v.size(); ++i) {
    p.v[i] = 255.0 * (0.299 * img.plane(0)[i] + 0.587 * img.plane(1)[i] + 0.114 * img.plane(2)[i]);
  }
  return p;
}

Plane downsample2(const Plane& p) {
  Plane out{p.h / 2, p.w / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.h) * out.w);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.v[static_cast<std::size_t>(y) * out.w + x] =
          0.25 * (p(2 * y, 2 * x) + p(2 * y + 1, 2 * x) + p(2 * y, 2 * x + 1) + p(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

// 7x7 Gaussian, sigma 7/6, replicated borders.
Plane gaussian7(const Plane& p) {
  static const std::array<double, 7> taps = [] {
    std::array<double, 7> t{};
    double sum = 0.0;
    const double s = 7.0 / 6.0;
    for (int i = 0; i < 7; ++i) {
      t[i] = std::exp(-(i - 3) * (i - 3) / (2.0 * s * s));
      sum += t[i];
    }
    for (double& x : t) x /= sum;
    return t;
  }();
  Plane tmp{p.h, p.w, std::vector<double>(p.v.size())};
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 7; ++k) acc += taps[k] * p(y, std::clamp(x + k - 3, 0, p.w - 1));
      tmp.v[static_cast<std::size_t>(y) * p.w + x] = acc;
    }
  }
  Plane out{p.h, p.w, std::vector<double>(p.v.size())};
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 7; ++k) acc += taps[k] * tmp(std::clamp(y + k - 3, 0, p.h - 1), x);
      out.v[static_cast<std::size_t>(y) * p.w + x] = acc;
    }
  }
  return out;
}

struct Mscn {
  Plane coeff;
  Plane sigma;
};

Mscn mscn(const Plane& p) {
  const Plane mu = gaussian7(p);
  Plane sq{p.h, p.w, p.v};
  for (double& x : sq.v) x *= x;
  const Plane mu_sq = gaussian7(sq);
  Mscn m{{p.h, p.w, std::vector<double>(p.v.size())}, {p.h, p.w, std::vector<double>(p.v.size())}};
  for (std::size_t i = 0; i < p.v.size(); ++i) {
    const double s = std::sqrt(std::abs(mu_sq.v[i] - mu.v[i] * mu.v[i]));
    m.sigma.v[i] = s;
    m.coeff.v[i] = (p.v[i] - mu.v[i]) / (s + 1.0);
  }
  return m;
}

struct GammaGrid {
  std::vector<double> shape;
  std::vector<double> ggd_ratio;   // G(1/a) G(3/a) / G(2/a)^2
  std::vector<double> aggd_ratio;  // G(2/a)^2 / (G(1/a) G(3/a))
};

const GammaGrid& gamma_grid() {
  static const GammaGrid grid = [] {
    GammaGrid g;
    for (int i = 0; i <= 9800; ++i) {
      const double a = 0.2 + 0.001 * i;
      const double g1 = std::tgamma(1.0 / a), g2 = std::tgamma(2.0 / a), g3 = std::tgamma(3.0 / a);
      g.shape.push_back(a);
      g.ggd_ratio.push_back(g1 * g3 / (g2 * g2));
      g.aggd_ratio.push_back(g2 * g2 / (g1 * g3));
    }
    return g;
  }();
  return grid;
}

double nearest_shape(const std::vector<double>& ratios, double target) {
  const auto& grid = gamma_grid();
  std::size_t best = 0;
  double best_err = std::abs(ratios[0] - target);
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    const double err = std::abs(ratios[i] - target);
    if (err < best_err) {
      best_err = err;
      best = i;
    }
  }
  return grid.shape[best];
}

void ggd_fit(const std::vector<double>& x, double* out) {
  double sq = 0.0, ab = 0.0;
  for (double v : x) {
    sq += v * v;
    ab += std::abs(v);
  }
  sq /= x.size();
  ab /= x.size();
  const double rho = ab > 0.0 ? sq / (ab * ab) : 0.0;
  out[0] = nearest_shape(gamma_grid().ggd_ratio, rho);
  out[1] = sq;
}

void aggd_fit(const std::vector<double>& x, double* out) {
  double left = 0.0, right = 0.0, ab = 0.0, sq = 0.0;
  std::size_t nl = 0, nr = 0;
  for (double v : x) {
    if (v < 0.0) {
      left += v * v;
      ++nl;
    } else if (v > 0.0) {
      right += v * v;
      ++nr;
    }
    ab += std::abs(v);
    sq += v * v;
  }
  const double left_std = nl ? std::sqrt(left / nl) : 0.0;
  const double right_std = nr ? std::sqrt(right / nr) : 0.0;
  ab /= x.size();
  sq /= x.size();
  double alpha = 0.2;
  if (left_std > 0.0 && right_std > 0.0 && sq > 0.0) {
    const double gh = left_std / right_std;
    const double rhat = ab * ab / sq;
    const double rnorm = rhat * (gh * gh * gh + 1.0) * (gh + 1.0) / ((gh * gh + 1.0) * (gh * gh + 1.0));
    alpha = nearest_shape(gamma_grid().aggd_ratio, rnorm);
  }
  const double mean = (right_std - left_std) * (std::tgamma(2.0 / alpha) / std::tgamma(1.0 / alpha)) *
                      std::sqrt(std::tgamma(1.0 / alpha) / std::tgamma(3.0 / alpha));
  out[0] = alpha;
  out[1] = mean;
  out[2] = left_std * left_std;
  out[3] = right_std * right_std;
}

// 18 features of one patch of an MSCN map.
void patch_features(const Plane& c, int y0, int x0, int size, double* out) {
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(size) * size);
  for (int y = y0; y < y0 + size; ++y) {
    for (int x = x0; x < x0 + size; ++x) vals.push_back(c(y, x));
  }
  ggd_fit(vals, out);
  const int shifts[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
  for (int s = 0; s < 4; ++s) {
    const int dy = shifts[s][0], dx = shifts[s][1];
    std::vector<double> prod;
    prod.reserve(vals.size());
    for (int y = y0; y < y0 + size - dy; ++y) {
      for (int x = std::max(x0, x0 - dx); x < std::min(x0 + size, x0 + size - dx); ++x) {
        prod.push_back(c(y, x) * c(y + dy, x + dx));
      }
    }
    aggd_fit(prod, out + 2 + 4 * s);
  }
}

}  // namespace

std::vector<NiqeFeatures> niqe_patch_features(const RGBImage& img, int patch_size, double sharpness_threshold) {
  if (patch_size < 8 || patch_size % 2 != 0) throw InvalidArgumentError("niqe patch size must be even and >= 8");
  if (img.height() < patch_size || img.width() < patch_size) {
    throw DomainError("niqe needs images of at least " + std::to_string(patch_size) + " px per side");
  }
  Plane g = gray255(img);
  const int ph = g.h / patch_size, pw = g.w / patch_size;
  Plane cropped{ph * patch_size, pw * patch_size, {}};
  for (int y = 0; y < cropped.h; ++y) {
    for (int x = 0; x < cropped.w; ++x) cropped.v.push_back(g(y, x));
  }
  const Mscn s1 = mscn(cropped);
  const Mscn s2 = mscn(downsample2(cropped));

  std::vector<NiqeFeatures> feats;
  std::vector<double> sharpness;
  for (int py = 0; py < ph; ++py) {
    for (int px = 0; px < pw; ++px) {
      NiqeFeatures f{};
      patch_features(s1.coeff, py * patch_size, px * patch_size, patch_size, f.data());
      const int half = patch_size / 2;
      patch_features(s2.coeff, py * half, px * half, half, f.data() + 18);
      double sharp = 0.0;
      for (int y = py * patch_size; y < (py + 1) * patch_size; ++y) {
        for (int x = px * patch_size; x < (px + 1) * patch_size; ++x) sharp += s1.sigma(y, x);
      }
      feats.push_back(f);
      sharpness.push_back(sharp / (static_cast<double>(patch_size) * patch_size));
    }
  }
  if (sharpness_threshold <= 0.0) return feats;
  const double cut = sharpness_threshold * *std::max_element(sharpness.begin(), sharpness.end());
  std::vector<NiqeFeatures> kept;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    if (sharpness[i] > cut || sharpness[i] == cut) kept.push_back(feats[i]);
  }
  return kept;
}

namespace {

void gaussian_stats(const std::vector<NiqeFeatures>& feats, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  const int n = static_cast<int>(feats.size());
  Eigen::MatrixXd x(n, kNiqeFeatureDim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < kNiqeFeatureDim; ++j) x(i, j) = feats[i][j];
  }
  mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  cov = n > 1 ? Eigen::MatrixXd(centered.transpose() * centered / (n - 1))
              : Eigen::MatrixXd::Zero(kNiqeFeatureDim, kNiqeFeatureDim);
}

}  // namespace

NiqeModel fit_niqe_model(std::span<const RGBImage> pristine, int patch_size, double sharpness_threshold) {
  std::vector<NiqeFeatures> all;
  for (const RGBImage& img : pristine) {
    auto f = niqe_patch_features(img, patch_size, sharpness_threshold);
    all.insert(all.end(), f.begin(), f.end());
  }
  if (all.size() < 2) throw InsufficientDataError("niqe fit needs at least two pristine patches");
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  gaussian_stats(all, mean, cov);
  NiqeModel model;
  model.patch_size = patch_size;
  model.mean.assign(mean.data(), mean.data() + mean.size());
  model.covariance.resize(static_cast<std::size_t>(kNiqeFeatureDim) * kNiqeFeatureDim);
  for (int i = 0; i < kNiqeFeatureDim; ++i) {
    for (int j = 0; j < kNiqeFeatureDim; ++j) model.covariance[i * kNiqeFeatureDim + j] = cov(i, j);
  }
  return model;
}

NiqeModel fit_niqe_model(const fs::path& dir, int patch_size, double sharpness_threshold, int* used_images) {
  if (!fs::is_directory(dir)) throw ConfigError("pristine directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RGBImage> images;
  for (const auto& f : files) {
    try {
      RGBImage img = read_png_rgb(f);
      if (img.height() >= patch_size && img.width() >= patch_size) images.push_back(std::move(img));
    } catch (const IoError&) {
    }
  }
  if (used_images) *used_images = static_cast<int>(images.size());
  return fit_niqe_model(images, patch_size, sharpness_threshold);
}

void save_niqe_model(const fs::path& path, const NiqeModel& model) {
  nlohmann::json cov = nlohmann::json::array();
  for (int i = 0; i < kNiqeFeatureDim; ++i) {
    cov.push_back(std::vector<double>(model.covariance.begin() + i * kNiqeFeatureDim,
                                      model.covariance.begin() + (i + 1) * kNiqeFeatureDim));
  }
  const nlohmann::json j = {{"feature_dim", kNiqeFeatureDim},
                            {"patch_size", model.patch_size},
                            {"mean", model.mean},
                            {"covariance", cov}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write niqe model: " + path.string());
  out << j.dump(2) << '\n';
}

NiqeModel load_niqe_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("niqe model file not found: " + path.string());
  NiqeModel model;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("feature_dim").get<int>() != kNiqeFeatureDim) throw ConfigError("niqe model feature_dim must be 36");
    model.patch_size = j.value("patch_size", kNiqePatchSize);
    model.mean = j.at("mean").get<std::vector<double>>();
    for (const auto& row : j.at("covariance")) {
      const auto r = row.get<std::vector<double>>();
      if (r.size() != static_cast<std::size_t>(kNiqeFeatureDim)) throw ConfigError("niqe covariance row size");
      model.covariance.insert(model.covariance.end(), r.begin(), r.end());
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed niqe model: ") + ex.what());
  }
  if (model.mean.size() != static_cast<std::size_t>(kNiqeFeatureDim) ||
      model.covariance.size() != static_cast<std::size_t>(kNiqeFeatureDim) * kNiqeFeatureDim) {
    throw ConfigError("niqe model has wrong dimensions");
  }
  return model;
}

double niqe(const RGBImage& img, const NiqeModel& model) {
  const auto feats = niqe_patch_features(img, model.patch_size, 0.0);
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  gaussian_stats(feats, mean, cov);
  const Eigen::Map<const Eigen::VectorXd> m1(model.mean.data(), kNiqeFeatureDim);
  const Eigen::Map<const Eigen::Matrix<double, kNiqeFeatureDim, kNiqeFeatureDim, Eigen::RowMajor>> s1(
      model.covariance.data());
  const Eigen::MatrixXd pooled = 0.5 * (Eigen::MatrixXd(s1) + cov);
  const Eigen::MatrixXd pinv = pooled.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::VectorXd d = m1 - mean;
  return std::sqrt(std::max(0.0, d.dot(pinv * d)));
}

double niqe(const RGBImage& img, const fs::path& model_file) { return niqe(img, load_niqe_model(model_file)); }

}  // namespace l2rir
