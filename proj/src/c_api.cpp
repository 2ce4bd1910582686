#include "l2rir.h"

#include <cstring>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "l2rir/checkpoint.hpp"
#include "l2rir/image.hpp"
#include "l2rir/model.hpp"
#include "l2rir/niqe.hpp"
#include "l2rir/png_io.hpp"
#include "l2rir/probe.hpp"
#include "l2rir/synthesis.hpp"
#include "l2rir/trainer.hpp"

struct l2r_model {
  std::unique_ptr<l2rir::L2RirNet> net;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

l2r_status fail(l2r_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

l2r_status from_code(l2rir::ErrorCode code) {
  switch (code) {
    case l2rir::ErrorCode::kInvalidArgument: return L2R_ERR_INVALID_ARGUMENT;
    case l2rir::ErrorCode::kDimension: return L2R_ERR_DIMENSION;
    case l2rir::ErrorCode::kDomain: return L2R_ERR_DOMAIN;
    case l2rir::ErrorCode::kBounds: return L2R_ERR_BOUNDS;
    case l2rir::ErrorCode::kInsufficientData: return L2R_ERR_INSUFFICIENT_DATA;
    case l2rir::ErrorCode::kConfig: return L2R_ERR_CONFIG;
    case l2rir::ErrorCode::kIo: return L2R_ERR_IO;
    case l2rir::ErrorCode::kNumeric: return L2R_ERR_NUMERIC;
    case l2rir::ErrorCode::kInternal: return L2R_ERR_INTERNAL;
  }
  return L2R_ERR_INTERNAL;
}

template <typename F>
l2r_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return L2R_OK;
  } catch (const l2rir::Error& ex) {
    return fail(from_code(ex.code()), ex.what());
  } catch (const json::exception& ex) {
    return fail(L2R_ERR_CONFIG, std::string("invalid JSON: ") + ex.what());
  } catch (const std::filesystem::filesystem_error& ex) {
    return fail(L2R_ERR_IO, ex.what());
  } catch (const std::bad_alloc&) {
    return fail(L2R_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& ex) {
    return fail(L2R_ERR_INTERNAL, ex.what());
  }
}

json parse_options(const char* text) {
  if (!text || !*text) return json::object();
  json j = json::parse(text);
  if (!j.is_object()) throw l2rir::ConfigError("options must be a JSON object");
  return j;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const json& j) {
  if (out) *out = dup_string(j.dump());
}

void require(const void* p, const char* what) {
  if (!p) throw l2rir::InvalidArgumentError(std::string(what) + " must not be NULL");
}

std::optional<l2rir::Split> split_option(const json& o, std::optional<l2rir::Split> fallback) {
  if (!o.contains("split")) return fallback;
  const auto s = o.at("split").get<std::string>();
  if (s == "train") return l2rir::Split::kTrain;
  if (s == "test") return l2rir::Split::kTest;
  if (s == "all") return std::nullopt;
  throw l2rir::ConfigError("split must be train, test or all");
}

json summary_of(const l2rir::TrainResult& r) {
  json j = {{"steps", r.steps}, {"epochs", r.epochs}};
  if (!r.log.empty()) {
    const auto& first = r.log.front();
    const auto& last = r.log.back();
    j["initial"] = {{"L_P", first.l_p}, {"L_R", first.l_r}, {"L", first.total}};
    j["final"] = {{"L_P", last.l_p}, {"L_R", last.l_r}, {"L", last.total}, {"lr", last.lr}};
  }
  return j;
}

}  // namespace

extern "C" {

const char* l2r_last_error(void) { return g_last_error.c_str(); }

const char* l2r_status_string(l2r_status status) {
  switch (status) {
    case L2R_OK: return "ok";
    case L2R_ERR_INVALID_ARGUMENT: return "invalid argument";
    case L2R_ERR_DIMENSION: return "dimension error";
    case L2R_ERR_DOMAIN: return "domain error";
    case L2R_ERR_BOUNDS: return "bounds error";
    case L2R_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case L2R_ERR_CONFIG: return "configuration error";
    case L2R_ERR_IO: return "i/o error";
    case L2R_ERR_NUMERIC: return "numeric error";
    case L2R_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* l2r_version(void) { return "0.1.0"; }

int l2r_deterministic_mode(void) { return l2rir::deterministic_mode() ? 1 : 0; }

void l2r_string_free(char* s) { delete[] s; }

l2r_status l2r_model_create(const char* config_json, l2r_model** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const auto config = l2rir::model_config_from_json(parse_options(config_json));
    auto handle = std::make_unique<l2r_model>();
    handle->net = std::make_unique<l2rir::L2RirNet>(config);
    *out = handle.release();
  });
}

l2r_status l2r_model_load(const char* path, l2r_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<l2r_model>();
    handle->net = l2rir::load_model(path);
    *out = handle.release();
  });
}

l2r_status l2r_model_save(const l2r_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    l2rir::save_model(path, *model->net);
  });
}

void l2r_model_free(l2r_model* model) { delete model; }

l2r_status l2r_model_param_count(const l2r_model* model, size_t* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = model->net->parameter_count();
  });
}

l2r_status l2r_model_config(const l2r_model* model, char** json_out) {
  return guarded([&] {
    require(model, "model");
    require(json_out, "json_out");
    emit(json_out, l2rir::to_json(model->net->config()));
  });
}

l2r_status l2r_restore(const l2r_model* model, const double* rgb, int height, int width, double* out) {
  return guarded([&] {
    require(model, "model");
    require(rgb, "rgb");
    require(out, "out");
    if (height < 1 || width < 1) throw l2rir::DimensionError("image dimensions must be >= 1");
    const std::size_t n = static_cast<std::size_t>(3) * height * width;
    const l2rir::RGBImage img(height, width, std::vector<double>(rgb, rgb + n));
    const l2rir::RGBImage restored = model->net->restore(img);
    std::memcpy(out, restored.values().data(), n * sizeof(double));
  });
}

l2r_status l2r_synth(const char* src_dir, const char* out_dir, const char* options_json, char** summary_json_out) {
  return guarded([&] {
    require(src_dir, "src_dir");
    require(out_dir, "out_dir");
    const json o = parse_options(options_json);
    l2rir::BuildOptions options;
    options.seed = o.value("seed", options.seed);
    options.split_ratio = o.value("split_ratio", options.split_ratio);
    if (o.contains("ranges")) options.ranges = l2rir::synthesis_ranges_from_json(o.at("ranges"));
    const auto manifest = l2rir::build_dataset(src_dir, out_dir, options);
    emit(summary_json_out, {{"pairs", manifest.entries.size()},
                            {"train", manifest.count(l2rir::Split::kTrain)},
                            {"test", manifest.count(l2rir::Split::kTest)},
                            {"warnings", manifest.warnings},
                            {"manifest", (std::filesystem::path(out_dir) / "manifest.json").string()}});
  });
}

l2r_status l2r_train(const char* config_json, char** summary_json_out) {
  return guarded([&] {
    const auto config = l2rir::train_config_from_json(parse_options(config_json));
    const auto result = l2rir::train(config);
    json summary = summary_of(result);
    summary["output_dir"] = config.output_dir.string();
    emit(summary_json_out, summary);
  });
}

l2r_status l2r_evaluate(const l2r_model* model, const char* dataset, const char* options_json,
                        char** report_json_out) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    const json o = parse_options(options_json);
    l2rir::EvalOptions options;
    if (o.contains("metrics")) {
      options.psnr = options.ssim = options.niqe = false;
      for (const auto& m : o.at("metrics")) {
        const auto name = m.get<std::string>();
        if (name == "psnr") {
          options.psnr = true;
        } else if (name == "ssim") {
          options.ssim = true;
        } else if (name == "niqe") {
          options.niqe = true;
        } else {
          throw l2rir::ConfigError("unknown metric '" + name + "'");
        }
      }
    }
    if (o.contains("niqe_model")) options.niqe_model = o.at("niqe_model").get<std::string>();
    if (o.contains("psnr_mode")) options.psnr_mode = l2rir::psnr_mode_from_string(o.at("psnr_mode").get<std::string>());
    options.split = split_option(o, options.split);
    options.score_inputs = o.value("score_inputs", options.score_inputs);
    options.runtime_size = o.value("runtime_size", options.runtime_size);
    options.runtime_runs = o.value("runtime_runs", options.runtime_runs);
    if (options.runtime_runs > 0 && options.runtime_runs < 10) {
      throw l2rir::ConfigError("runtime_runs must be 0 (skip) or >= 10");
    }
    if (o.contains("output_dir")) options.output_dir = o.at("output_dir").get<std::string>();
    emit(report_json_out, l2rir::to_json(l2rir::evaluate(*model->net, dataset, options)));
  });
}

l2r_status l2r_infer_dir(const l2r_model* model, const char* input_dir, const char* output_dir,
                         char** summary_json_out) {
  return guarded([&] {
    require(model, "model");
    require(input_dir, "input_dir");
    require(output_dir, "output_dir");
    const auto result = l2rir::infer(*model->net, input_dir, output_dir);
    json written = json::array();
    for (const auto& p : result.written) written.push_back(p.string());
    emit(summary_json_out, {{"written", written}, {"warnings", result.warnings}});
  });
}

l2r_status l2r_probe(const char* image_path, const char* options_json, char** result_json_out) {
  return guarded([&] {
    require(image_path, "image_path");
    const json o = parse_options(options_json);
    const l2rir::RGBImage img = l2rir::read_png_rgb(image_path);
    l2rir::PixelPoint center{img.width() / 2.0, img.height() / 2.0};
    if (o.contains("center")) {
      const auto c = o.at("center").get<std::vector<double>>();
      if (c.size() != 2) throw l2rir::ConfigError("center must be [x, y]");
      center = {c[0], c[1]};
    }
    l2rir::FitOptions fit;
    fit.r_min = o.value("r_min", fit.r_min);
    fit.clip_level = o.value("clip_level", fit.clip_level);
    fit.residual_threshold = o.value("residual_threshold", fit.residual_threshold);
    if (o.contains("direction")) {
      const auto d = o.at("direction").get<std::vector<double>>();
      if (d.size() != 2) throw l2rir::ConfigError("direction must be [dx, dy]");
      fit.direction = l2rir::RayDirection{d[0], d[1]};
    }
    l2rir::RadiusBreakpoints bp;
    if (o.contains("breakpoints")) {
      const auto b = o.at("breakpoints").get<std::vector<double>>();
      if (b.size() != 2 || !(b[0] <= b[1])) throw l2rir::ConfigError("breakpoints must be [a, b] with a <= b");
      bp = {b[0], b[1]};
    }
    const auto profile = l2rir::fit_inverse_square(img, center, fit);
    json light = json::array();
    for (const auto& s : profile.samples) {
      light.push_back({s.r, s.e, std::string(l2rir::to_string(l2rir::classify_radius(s.r, bp)))});
    }
    json rain = json::array();
    if (o.contains("mask")) {
      const auto mask = l2rir::read_png_gray(o.at("mask").get<std::string>());
      const auto density = l2rir::rain_density_profile(mask, center, o.value("patch_size", 20), fit.direction);
      for (const auto& s : density.samples) rain.push_back({s.r, s.m});
    }
    emit(result_json_out, {{"center", {center.x, center.y}},
                           {"E0", profile.e0},
                           {"residual", profile.residual},
                           {"point_source", profile.point_source},
                           {"fitted_samples", profile.fitted_samples},
                           {"breakpoints", {bp.overexposed_end, bp.rain_end}},
                           {"light", light},
                           {"rain", rain}});
  });
}

l2r_status l2r_detail(const char* input_png, const char* output_png) {
  return guarded([&] {
    require(input_png, "input_png");
    require(output_png, "output_png");
    l2rir::write_png(output_png, l2rir::compute_detail_image(l2rir::read_png_rgb(input_png)));
  });
}

l2r_status l2r_attention_map(const char* input_png, const char* output_png) {
  return guarded([&] {
    require(input_png, "input_png");
    require(output_png, "output_png");
    l2rir::write_png(output_png, l2rir::compute_attention_map(l2rir::read_png_rgb(input_png)));
  });
}

l2r_status l2r_niqe_fit(const char* pristine_dir, const char* model_path, const char* options_json,
                        char** summary_json_out) {
  return guarded([&] {
    require(pristine_dir, "pristine_dir");
    require(model_path, "model_path");
    const json o = parse_options(options_json);
    int used = 0;
    const auto model = l2rir::fit_niqe_model(pristine_dir, o.value("patch_size", l2rir::kNiqePatchSize),
                                             o.value("sharpness_threshold", 0.75), &used);
    l2rir::save_niqe_model(model_path, model);
    emit(summary_json_out, {{"images", used}, {"feature_dim", l2rir::kNiqeFeatureDim}, {"model", model_path}});
  });
}

l2r_status l2r_niqe_score(const char* image_path, const char* model_path, double* out) {
  return guarded([&] {
    require(image_path, "image_path");
    require(model_path, "model_path");
    require(out, "out");
    *out = l2rir::niqe(l2rir::read_png_rgb(image_path), std::filesystem::path(model_path));
  });
}

}  // extern "C"
