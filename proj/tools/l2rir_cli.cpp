#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "l2rir.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliFailure {
  int code;
};

class Owned {
 public:
  ~Owned() { l2r_string_free(ptr_); }
  char** out() { return &ptr_; }
  json parsed() const { return ptr_ ? json::parse(ptr_) : json::object(); }

 private:
  char* ptr_ = nullptr;
};

class Model {
 public:
  explicit Model(const std::string& checkpoint) { check(l2r_model_load(checkpoint.c_str(), &ptr_)); }
  ~Model() { l2r_model_free(ptr_); }
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  const l2r_model* get() const { return ptr_; }

  static void check(l2r_status status) {
    if (status == L2R_OK) return;
    std::cerr << "error (" << l2r_status_string(status) << "): " << l2r_last_error() << '\n';
    throw CliFailure{static_cast<int>(status) + 1};
  }

 private:
  l2r_model* ptr_ = nullptr;
};

void check(l2r_status status) { Model::check(status); }

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open config " << path << '\n';
    throw CliFailure{2};
  }
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    std::cerr << "error: config " << path << ": " << ex.what() << '\n';
    throw CliFailure{2};
  }
}

template <typename T>
void override(json& j, const std::string& key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-light rainy image restoration toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Build a paired low-light rainy dataset");
  std::string synth_src, synth_out, synth_config;
  std::optional<std::uint64_t> synth_seed;
  std::optional<double> synth_ratio;
  synth->add_option("--src", synth_src, "Directory of <id>_rain.png / <id>_gt.png pairs")->required();
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--config", synth_config, "JSON with seed, split_ratio and ranges");
  synth->add_option("--seed", synth_seed);
  synth->add_option("--split-ratio", synth_ratio);

  // train
  auto* train = app.add_subcommand("train", "Train a model");
  std::string train_config;
  std::optional<std::string> t_dataset, t_out, t_variant, t_preset, t_schedule, t_fx;
  std::optional<int> t_epochs, t_batch, t_crop, t_base, t_depth, t_ckpt_every;
  std::optional<long> t_steps;
  std::optional<double> t_lr_init, t_lr_final;
  std::optional<std::uint64_t> t_seed;
  bool t_freeze = false;
  train->add_option("--config", train_config, "Train config JSON");
  train->add_option("--dataset", t_dataset, "Dataset directory with manifest.json");
  train->add_option("--out", t_out, "Run output directory");
  train->add_option("--variant", t_variant, "V1, V2, V3 or V4");
  train->add_option("--preset", t_preset, "desk or full");
  train->add_option("--epochs", t_epochs);
  train->add_option("--steps", t_steps, "Total optimizer steps; overrides epochs");
  train->add_option("--batch", t_batch);
  train->add_option("--crop", t_crop);
  train->add_option("--lr-init", t_lr_init);
  train->add_option("--lr-final", t_lr_final);
  train->add_option("--seed", t_seed);
  train->add_option("--schedule", t_schedule, "per-step or per-epoch");
  train->add_option("--base-channels", t_base, "Base width of both networks");
  train->add_option("--depth", t_depth, "U-Net depth of both networks");
  train->add_option("--checkpoint-every", t_ckpt_every, "Numbered snapshot interval in epochs");
  train->add_option("--feature-extractor", t_fx, "Perceptual feature archive");
  train->add_flag("--freeze-pnet", t_freeze);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string e_ckpt, e_dataset;
  std::vector<std::string> e_metrics;
  std::optional<std::string> e_niqe, e_mode, e_split, e_out;
  std::optional<int> e_rt_size, e_rt_runs;
  bool e_inputs = false;
  eval->add_option("--checkpoint", e_ckpt)->required();
  eval->add_option("--dataset", e_dataset, "Manifest dataset or bare PNG directory")->required();
  eval->add_option("--metrics", e_metrics, "psnr ssim niqe")->delimiter(',');
  eval->add_option("--niqe-model", e_niqe);
  eval->add_option("--psnr-mode", e_mode, "rgb or y");
  eval->add_option("--split", e_split, "train, test or all");
  eval->add_option("--out", e_out, "Directory for metrics.csv / metrics.json");
  eval->add_option("--runtime-size", e_rt_size);
  eval->add_option("--runtime-runs", e_rt_runs, "0 skips timing");
  eval->add_flag("--score-inputs", e_inputs, "Score degraded inputs instead of restorations");

  // infer
  auto* infer = app.add_subcommand("infer", "Restore a directory of PNGs");
  std::string i_ckpt, i_in, i_out;
  infer->add_option("--checkpoint", i_ckpt)->required();
  infer->add_option("--input", i_in)->required();
  infer->add_option("--output", i_out)->required();

  // probe
  auto* probe = app.add_subcommand("probe", "Fit the light falloff and rain density along a ray");
  std::string p_image, p_config;
  std::optional<std::string> p_mask, p_csv, p_json;
  std::vector<double> p_center, p_direction;
  std::optional<int> p_patch;
  std::optional<double> p_rmin;
  probe->add_option("--image", p_image)->required();
  probe->add_option("--config", p_config, "JSON probe options");
  probe->add_option("--center", p_center, "x y")->expected(2);
  probe->add_option("--direction", p_direction, "dx dy")->expected(2);
  probe->add_option("--mask", p_mask, "Binary rain mask PNG");
  probe->add_option("--patch-size", p_patch);
  probe->add_option("--r-min", p_rmin);
  probe->add_option("--csv", p_csv, "Profile CSV (r,E,m)");
  probe->add_option("--json", p_json, "Summary JSON");

  // detail
  auto* detail = app.add_subcommand("detail", "Write the detail image (or attention map) of a PNG");
  std::string d_in, d_out;
  bool d_map = false;
  detail->add_option("--input", d_in)->required();
  detail->add_option("--output", d_out)->required();
  detail->add_flag("--attention", d_map, "Write the attention map instead");

  // niqe-fit
  auto* niqe_fit = app.add_subcommand("niqe-fit", "Fit a pristine NIQE model from clean PNGs");
  std::string n_dir, n_out;
  std::optional<int> n_patch;
  std::optional<double> n_sharp;
  niqe_fit->add_option("--pristine", n_dir)->required();
  niqe_fit->add_option("--out", n_out)->required();
  niqe_fit->add_option("--patch-size", n_patch);
  niqe_fit->add_option("--sharpness-threshold", n_sharp);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      json o = load_config(synth_config);
      override(o, "seed", synth_seed);
      override(o, "split_ratio", synth_ratio);
      Owned summary;
      check(l2r_synth(synth_src.c_str(), synth_out.c_str(), o.dump().c_str(), summary.out()));
      std::cout << summary.parsed().dump(2) << '\n';
    } else if (*train) {
      json c = load_config(train_config);
      override(c, "preset", t_preset);
      override(c, "dataset", t_dataset);
      override(c, "output_dir", t_out);
      override(c, "variant", t_variant);
      override(c, "epochs", t_epochs);
      override(c, "max_steps", t_steps);
      override(c, "batch_size", t_batch);
      override(c, "crop", t_crop);
      override(c, "lr_init", t_lr_init);
      override(c, "lr_final", t_lr_final);
      override(c, "seed", t_seed);
      override(c, "schedule", t_schedule);
      override(c, "checkpoint_every", t_ckpt_every);
      override(c, "feature_extractor", t_fx);
      if (t_freeze) c["freeze_pnet"] = true;
      for (const char* net : {"pnet", "rnet"}) {
        if (t_base) c["model"][net]["base_channels"] = *t_base;
        if (t_depth) c["model"][net]["depth"] = *t_depth;
      }
      std::cerr << "deterministic mode: " << (l2r_deterministic_mode() ? "on" : "off") << '\n';
      Owned summary;
      check(l2r_train(c.dump().c_str(), summary.out()));
      std::cout << summary.parsed().dump(2) << '\n';
    } else if (*eval) {
      json o = json::object();
      if (!e_metrics.empty()) o["metrics"] = e_metrics;
      override(o, "niqe_model", e_niqe);
      override(o, "psnr_mode", e_mode);
      override(o, "split", e_split);
      override(o, "output_dir", e_out);
      override(o, "runtime_size", e_rt_size);
      override(o, "runtime_runs", e_rt_runs);
      if (e_inputs) o["score_inputs"] = true;
      Model model(e_ckpt);
      Owned report;
      check(l2r_evaluate(model.get(), e_dataset.c_str(), o.dump().c_str(), report.out()));
      json r = report.parsed();
      r.erase("rows");
      std::cout << r.dump(2) << '\n';
    } else if (*infer) {
      Model model(i_ckpt);
      Owned summary;
      check(l2r_infer_dir(model.get(), i_in.c_str(), i_out.c_str(), summary.out()));
      const json s = summary.parsed();
      for (const auto& w : s.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << '\n';
      std::cout << "restored " << s.at("written").size() << " image(s) into " << i_out << '\n';
    } else if (*probe) {
      json o = load_config(p_config);
      if (!p_center.empty()) o["center"] = p_center;
      if (!p_direction.empty()) o["direction"] = p_direction;
      override(o, "mask", p_mask);
      override(o, "patch_size", p_patch);
      override(o, "r_min", p_rmin);
      Owned result;
      check(l2r_probe(p_image.c_str(), o.dump().c_str(), result.out()));
      const json r = result.parsed();
      std::string csv = "r,E,m\n";
      for (const auto& s : r.at("light")) {
        csv += std::to_string(s[0].get<double>()) + "," + std::to_string(s[1].get<double>()) + ",\n";
      }
      for (const auto& s : r.at("rain")) {
        csv += std::to_string(s[0].get<double>()) + ",," + std::to_string(s[1].get<double>()) + "\n";
      }
      const json summary = {{"E0", r.at("E0")},
                            {"residual", r.at("residual")},
                            {"point_source", r.at("point_source")},
                            {"breakpoints", r.at("breakpoints")}};
      if (p_csv) {
        write_text(*p_csv, csv);
      } else {
        std::cout << csv;
      }
      if (p_json) {
        write_text(*p_json, summary.dump(2) + "\n");
      } else {
        std::cout << summary.dump(2) << '\n';
      }
    } else if (*detail) {
      check(d_map ? l2r_attention_map(d_in.c_str(), d_out.c_str()) : l2r_detail(d_in.c_str(), d_out.c_str()));
    } else if (*niqe_fit) {
      json o = json::object();
      override(o, "patch_size", n_patch);
      override(o, "sharpness_threshold", n_sharp);
      Owned summary;
      check(l2r_niqe_fit(n_dir.c_str(), n_out.c_str(), o.dump().c_str(), summary.out()));
      std::cout << summary.parsed().dump(2) << '\n';
    }
  } catch (const CliFailure& f) {
    return f.code;
  }
  return 0;
}
