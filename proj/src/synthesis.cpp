#include "l2rir/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "l2rir/png_io.hpp"
#include "l2rir/random.hpp"

namespace l2rir {

namespace fs = std::filesystem;

void validate(const SynthesisParams& p) {
  if (!(p.darken_gamma > 0.0)) throw DomainError("darken_gamma must be > 0");
  if (!(p.darken_gain > 0.0 && p.darken_gain <= 1.0)) throw DomainError("darken_gain must be in (0,1]");
  if (p.n_light_patches < 0) throw DomainError("n_light_patches must be >= 0");
  if (!(p.patch_radius_min > 0.0 && p.patch_radius_min <= p.patch_radius_max)) {
    throw DomainError("patch radius range must satisfy 0 < min <= max");
  }
  if (!(p.patch_boost >= 1.0)) throw DomainError("patch_boost must be >= 1");
  if (!(p.global_dim > 0.0 && p.global_dim <= 1.0)) throw DomainError("global_dim must be in (0,1]");
  if (!(p.noise_sigma >= 0.0)) throw DomainError("noise_sigma must be >= 0");
}

void validate(const SynthesisParams& p, int height, int width) {
  validate(p);
  if (p.n_light_patches > 0 && p.patch_radius_max > std::min(height, width) / 2.0) {
    throw DomainError("patch_radius_max exceeds half the smaller image dimension");
  }
}

RGBImage darken(const RGBImage& img, double gamma, double gain) {
  if (!(gamma > 0.0)) throw DomainError("darken: gamma must be > 0");
  if (!(gain > 0.0 && gain <= 1.0)) throw DomainError("darken: gain must be in (0,1]");
  RGBImage out = img;
  for (double& v : out.values()) v = std::clamp(gain * std::pow(v, gamma), 0.0, 1.0);
  return out;
}

namespace {

struct LightPatch {
  int cx, cy;
  double radius;
};

std::vector<LightPatch> patch_layout(const SynthesisParams& params, int height, int width, Rng& rng) {
  std::vector<LightPatch> patches;
  for (int i = 0; i < params.n_light_patches; ++i) {
    LightPatch p;
    p.cx = static_cast<int>(rng.uniform_int(0, width - 1));
    p.cy = static_cast<int>(rng.uniform_int(0, height - 1));
    p.radius = rng.uniform(params.patch_radius_min, params.patch_radius_max);
    patches.push_back(p);
  }
  return patches;
}

RGBImage apply_light_patches(const RGBImage& img, const SynthesisParams& params, Rng& rng) {
  validate(params, img.height(), img.width());
  const auto patches = patch_layout(params, img.height(), img.width(), rng);
  RGBImage out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double weight = 0.0;
      for (const LightPatch& p : patches) {
        const double d = std::hypot(x - p.cx, y - p.cy);
        if (d < p.radius) {
          weight = std::max(weight, 0.5 * (1.0 + std::cos(std::numbers::pi * d / p.radius)));
        }
      }
      const double factor = params.global_dim + (params.patch_boost - params.global_dim) * weight;
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = std::min(1.0, img.at(c, y, x) * factor);
    }
  }
  return out;
}

}  // namespace

RGBImage add_light_patches(const RGBImage& img, const SynthesisParams& params) {
  Rng rng(params.seed);
  return apply_light_patches(img, params, rng);
}

LlrPair synthesize_pair(const RGBImage& rainy, const RGBImage& clean, const SynthesisParams& params) {
  if (!rainy.same_shape(clean)) throw DimensionError("synthesize_pair: rainy and clean differ in shape");
  validate(params, rainy.height(), rainy.width());
  Rng rng(params.seed);
  RGBImage llr = apply_light_patches(darken(rainy, params.darken_gamma, params.darken_gain), params, rng);
  if (params.noise_sigma > 0.0) {
    for (double& v : llr.values()) v = std::clamp(v + params.noise_sigma * rng.normal(), 0.0, 1.0);
  }
  return {std::move(llr), clean};
}

SynthesisParams sample_params(const SynthesisRanges& ranges, std::uint64_t seed,
                              const std::string& id, int height, int width) {
  Rng rng(derive_seed(seed, id));
  SynthesisParams p;
  p.darken_gamma = rng.uniform(ranges.gamma_min, ranges.gamma_max);
  p.darken_gain = rng.uniform(ranges.gain_min, ranges.gain_max);
  p.n_light_patches = static_cast<int>(rng.uniform_int(ranges.patches_min, ranges.patches_max));
  p.patch_boost = rng.uniform(ranges.boost_min, ranges.boost_max);
  p.global_dim = rng.uniform(ranges.dim_min, ranges.dim_max);
  const double cap = std::min(height, width) / 2.0;
  p.patch_radius_max = std::min(ranges.radius_max, cap);
  p.patch_radius_min = std::min(ranges.radius_min, p.patch_radius_max);
  p.noise_sigma = ranges.noise_sigma;
  p.seed = rng.next_u64();
  return p;
}

std::size_t DatasetManifest::count(Split split) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                [split](const ManifestEntry& e) { return e.split == split; }));
}

std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

DatasetManifest build_dataset(const fs::path& src_dir, const fs::path& out_dir, const BuildOptions& options) {
  if (!fs::is_directory(src_dir)) throw IoError("source directory not found: " + src_dir.string());
  if (!(options.split_ratio >= 0.0 && options.split_ratio <= 1.0)) {
    throw DomainError("split_ratio must be in [0,1]");
  }

  std::map<std::string, fs::path> rainy_files, gt_files;
  for (const auto& entry : fs::directory_iterator(src_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const std::string stem = entry.path().stem().string();
    if (stem.size() > 5 && stem.ends_with("_rain")) {
      rainy_files[stem.substr(0, stem.size() - 5)] = entry.path();
    } else if (stem.size() > 3 && stem.ends_with("_gt")) {
      gt_files[stem.substr(0, stem.size() - 3)] = entry.path();
    }
  }

  DatasetManifest manifest;
  manifest.seed = options.seed;
  std::vector<std::string> ids;
  for (const auto& [id, path] : rainy_files) {
    if (gt_files.contains(id)) {
      ids.push_back(id);
    } else {
      ++manifest.warnings;
    }
  }
  for (const auto& [id, path] : gt_files) {
    if (!rainy_files.contains(id)) ++manifest.warnings;
  }
  if (ids.empty()) throw InsufficientDataError("no <id>_rain.png / <id>_gt.png pairs in " + src_dir.string());

  Rng split_rng(derive_seed(options.seed, "split"));
  split_rng.shuffle(ids.begin(), ids.end());
  const auto n_train = static_cast<std::size_t>(std::llround(options.split_ratio * ids.size()));

  for (Split split : {Split::kTrain, Split::kTest}) {
    for (const char* kind : {"llr", "gt"}) fs::create_directories(out_dir / to_string(split) / kind);
  }

  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::string& id = ids[i];
    const RGBImage rainy = read_png_rgb(rainy_files[id]);
    const RGBImage clean = read_png_rgb(gt_files[id]);
    if (!rainy.same_shape(clean)) {
      throw DimensionError("pair '" + id + "' has mismatched rainy/gt dimensions");
    }
    ManifestEntry entry;
    entry.id = id;
    entry.split = i < n_train ? Split::kTrain : Split::kTest;
    entry.params = sample_params(options.ranges, options.seed, id, rainy.height(), rainy.width());
    const fs::path split_dir = fs::path(to_string(entry.split));
    entry.llr = (split_dir / "llr" / (id + ".png")).generic_string();
    entry.gt = (split_dir / "gt" / (id + ".png")).generic_string();

    const LlrPair pair = synthesize_pair(rainy, clean, entry.params);
    write_png(out_dir / entry.llr, pair.llr);
    fs::copy_file(gt_files[id], out_dir / entry.gt, fs::copy_options::overwrite_existing);
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

nlohmann::json to_json(const SynthesisParams& p) {
  return {{"darken_gamma", p.darken_gamma}, {"darken_gain", p.darken_gain},
          {"n_light_patches", p.n_light_patches}, {"patch_radius_min", p.patch_radius_min},
          {"patch_radius_max", p.patch_radius_max}, {"patch_boost", p.patch_boost},
          {"global_dim", p.global_dim}, {"noise_sigma", p.noise_sigma}, {"seed", p.seed}};
}

SynthesisParams synthesis_params_from_json(const nlohmann::json& j) {
  SynthesisParams p;
  p.darken_gamma = j.value("darken_gamma", p.darken_gamma);
  p.darken_gain = j.value("darken_gain", p.darken_gain);
  p.n_light_patches = j.value("n_light_patches", p.n_light_patches);
  p.patch_radius_min = j.value("patch_radius_min", p.patch_radius_min);
  p.patch_radius_max = j.value("patch_radius_max", p.patch_radius_max);
  p.patch_boost = j.value("patch_boost", p.patch_boost);
  p.global_dim = j.value("global_dim", p.global_dim);
  p.noise_sigma = j.value("noise_sigma", p.noise_sigma);
  p.seed = j.value("seed", p.seed);
  return p;
}

nlohmann::json to_json(const SynthesisRanges& r) {
  return {{"gamma", {r.gamma_min, r.gamma_max}},   {"gain", {r.gain_min, r.gain_max}},
          {"patches", {r.patches_min, r.patches_max}}, {"boost", {r.boost_min, r.boost_max}},
          {"global_dim", {r.dim_min, r.dim_max}},  {"radius", {r.radius_min, r.radius_max}},
          {"noise_sigma", r.noise_sigma}};
}

SynthesisRanges synthesis_ranges_from_json(const nlohmann::json& j, SynthesisRanges r) {
  auto pair = [&](const char* key, auto& lo, auto& hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw ConfigError(std::string("range '") + key + "' must be [min, max]");
    v.at(0).get_to(lo);
    v.at(1).get_to(hi);
    if (lo > hi) throw ConfigError(std::string("range '") + key + "' has min > max");
  };
  pair("gamma", r.gamma_min, r.gamma_max);
  pair("gain", r.gain_min, r.gain_max);
  pair("patches", r.patches_min, r.patches_max);
  pair("boost", r.boost_min, r.boost_max);
  pair("global_dim", r.dim_min, r.dim_max);
  pair("radius", r.radius_min, r.radius_max);
  r.noise_sigma = j.value("noise_sigma", r.noise_sigma);
  return r;
}

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"id", e.id}, {"llr", e.llr}, {"gt", e.gt}, {"split", to_string(e.split)},
                       {"params", to_json(e.params)}});
  }
  return {{"version", m.version},
          {"seed", m.seed},
          {"counts", {{"train", m.count(Split::kTrain)}, {"test", m.count(Split::kTest)}}},
          {"warnings", m.warnings},
          {"entries", entries}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.version = j.at("version").get<int>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.warnings = j.value("warnings", std::size_t{0});
    std::set<std::string> seen;
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.id = e.at("id").get<std::string>();
      entry.llr = e.at("llr").get<std::string>();
      entry.gt = e.at("gt").get<std::string>();
      const auto split = e.at("split").get<std::string>();
      if (split != "train" && split != "test") throw ConfigError("manifest split must be train or test");
      entry.split = split == "train" ? Split::kTrain : Split::kTest;
      if (e.contains("params")) entry.params = synthesis_params_from_json(e.at("params"));
      if (!seen.insert(entry.llr).second || !seen.insert(entry.gt).second) {
        throw ConfigError("manifest paths must be unique");
      }
      m.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed manifest: ") + ex.what());
  }
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("dataset manifest not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("cannot parse manifest '" + path.string() + "': " + ex.what());
  }
  return manifest_from_json(j);
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << to_json(manifest).dump(2) << '\n';
}

}  // namespace l2rir
