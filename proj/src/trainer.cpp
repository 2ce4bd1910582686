#include "l2rir/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "l2rir/batch.hpp"
#include "l2rir/checkpoint.hpp"
#include "l2rir/niqe.hpp"
#include "l2rir/png_io.hpp"
#include "l2rir/random.hpp"

namespace l2rir {

namespace fs = std::filesystem;
using nn::Var;

bool deterministic_mode() {
  const char* v = std::getenv(kDeterministicEnv);
  if (!v) return true;
  const std::string s(v);
  return !(s == "0" || s == "false" || s == "off");
}

void TrainConfig::validate() const {
  if (!(lr_init > 0.0) || !(lr_final >= 0.0) || lr_final > lr_init) {
    throw ConfigError("learning rates must satisfy 0 <= lr_final <= lr_init, lr_init > 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0,1)");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1 && max_steps <= 0) throw ConfigError("epochs must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  const int f = 1 << (model.rnet.depth - 1);
  if (crop < f || crop % f != 0) {
    throw ConfigError("crop " + std::to_string(crop) + " must be a positive multiple of " + std::to_string(f));
  }
  model.resolved().validate();
  weights.validate();
}

std::uint64_t TrainConfig::resolved_seed() const {
  if (seed) return *seed;
  if (deterministic_mode()) return 0;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

TrainConfig train_preset(const std::string& name) {
  TrainConfig c;
  if (name == "desk") return c;
  if (name == "full") {
    c.batch_size = 24;
    c.crop = 256;
    c.epochs = 200;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "' (expected desk or full)");
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {{"lr_init", c.lr_init},
                      {"lr_final", c.lr_final},
                      {"beta1", c.beta1},
                      {"beta2", c.beta2},
                      {"batch_size", c.batch_size},
                      {"crop", c.crop},
                      {"epochs", c.epochs},
                      {"max_steps", c.max_steps},
                      {"model", to_json(c.model)},
                      {"weights",
                       {{"lambda_p", c.weights.lambda_p},
                        {"lambda_r", c.weights.lambda_r},
                        {"lambda_per", c.weights.lambda_per}}},
                      {"schedule", c.schedule == LrSchedule::kPerStep ? "per-step" : "per-epoch"},
                      {"freeze_pnet", c.freeze_pnet},
                      {"checkpoint_every", c.checkpoint_every},
                      {"dataset", c.dataset.string()},
                      {"output_dir", c.output_dir.string()}};
  if (c.seed) j["seed"] = *c.seed;
  if (c.feature_extractor) j["feature_extractor"] = c.feature_extractor->string();
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    if (j.contains("preset")) c = train_preset(j.at("preset").get<std::string>());
    c.lr_init = j.value("lr_init", c.lr_init);
    c.lr_final = j.value("lr_final", c.lr_final);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.crop = j.value("crop", c.crop);
    c.epochs = j.value("epochs", c.epochs);
    c.max_steps = j.value("max_steps", c.max_steps);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"), c.model);
    if (j.contains("variant")) c.model.variant = variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      c.weights.lambda_p = w.value("lambda_p", c.weights.lambda_p);
      c.weights.lambda_r = w.value("lambda_r", c.weights.lambda_r);
      c.weights.lambda_per = w.value("lambda_per", c.weights.lambda_per);
    }
    if (j.contains("schedule")) {
      const auto s = j.at("schedule").get<std::string>();
      if (s == "per-step") {
        c.schedule = LrSchedule::kPerStep;
      } else if (s == "per-epoch") {
        c.schedule = LrSchedule::kPerEpoch;
      } else {
        throw ConfigError("schedule must be per-step or per-epoch");
      }
    }
    c.freeze_pnet = j.value("freeze_pnet", c.freeze_pnet);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("feature_extractor")) c.feature_extractor = j.at("feature_extractor").get<std::string>();
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed train config: ") + ex.what());
  }
  return c;
}

double lr_at(long t, long total, double lr_init, double lr_final) {
  if (total <= 0) return lr_init;
  const double f = static_cast<double>(t) / static_cast<double>(total);
  return (1.0 - f) * lr_init + f * lr_final;
}

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

TrainResult train_model(L2RirNet& model, std::span<const LlrPair> data, const TrainConfig& config,
                        const FeatureExtractor& phi, const TrainHooks& hooks) {
  config.validate();
  if (data.empty()) throw InsufficientDataError("no training pairs");
  for (const auto& p : data) {
    if (!p.llr.same_shape(p.gt)) throw DimensionError("training pair llr/gt shapes differ");
    if (p.llr.height() < config.crop || p.llr.width() < config.crop) {
      throw ConfigError("training image smaller than crop " + std::to_string(config.crop));
    }
  }
  const std::uint64_t seed = config.resolved_seed();
  nn::ParameterSet& params = model.parameters();
  if (config.freeze_pnet) params.set_trainable("pnet.", false);
  nn::Adam adam(params, config.beta1, config.beta2);

  const long per_epoch = (static_cast<long>(data.size()) + config.batch_size - 1) / config.batch_size;
  const long total_steps = config.max_steps > 0 ? config.max_steps : per_epoch * config.epochs;
  const int epochs = static_cast<int>((total_steps + per_epoch - 1) / per_epoch);

  TrainResult result;
  long step = 0;
  for (int epoch = 0; epoch < epochs && step < total_steps; ++epoch) {
    Rng rng(derive_seed(seed, "epoch" + std::to_string(epoch)));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size() && step < total_steps; start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<RGBImage> xs, augs, gts;
      for (std::size_t k = start; k < end; ++k) {
        const LlrPair& p = data[order[k]];
        const int y0 = static_cast<int>(rng.uniform_int(0, p.llr.height() - config.crop));
        const int x0 = static_cast<int>(rng.uniform_int(0, p.llr.width() - config.crop));
        xs.push_back(crop(p.llr, y0, x0, config.crop, config.crop));
        gts.push_back(crop(p.gt, y0, x0, config.crop, config.crop));
        augs.push_back(augment(xs.back(), rng));
      }
      const double lr = config.schedule == LrSchedule::kPerStep
                            ? lr_at(step, total_steps - 1, config.lr_init, config.lr_final)
                            : lr_at(epoch, epochs - 1, config.lr_init, config.lr_final);
      params.zero_grad();
      const Tensor x = to_tensor(xs), gt = to_tensor(gts);
      const L2RirNet::TrainOutput out = model.forward_train(x, to_tensor(augs), gt);
      const Var l_r = restoration_loss(out.restored, Var::constant(gt), phi, config.weights);
      const Var l_p = out.contrastive ? *out.contrastive : Var::constant(Tensor::scalar(0.0));
      const Var loss = total_loss(l_p, l_r, config.weights);

      StepLog entry{step, epoch, l_p.value().item(), l_r.value().item(), loss.value().item(), lr};
      if (!finite(entry.l_p) || !finite(entry.l_r) || !finite(entry.total)) {
        std::ostringstream msg;
        msg << "non-finite loss at step " << step << " (epoch " << epoch << ", lr " << lr << "): L_P=" << entry.l_p
            << " L_R=" << entry.l_r << " L=" << entry.total;
        throw NumericError(msg.str());
      }
      nn::backward(loss);
      adam.step(lr);
      result.log.push_back(entry);
      if (hooks.on_step) hooks.on_step(entry);
      ++step;
    }
    result.epochs = epoch + 1;
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);
  }
  result.steps = step;
  return result;
}

namespace {

struct LoadedSet {
  std::vector<std::string> ids;
  std::vector<LlrPair> pairs;
};

LoadedSet load_manifest_pairs(const fs::path& dir, std::optional<Split> split) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw ConfigError("dataset manifest not found: " + manifest_path.string());
  const DatasetManifest manifest = load_manifest(manifest_path);
  LoadedSet set;
  for (const auto& e : manifest.entries) {
    if (split && e.split != *split) continue;
    set.ids.push_back(e.id);
    set.pairs.push_back({read_png_rgb(dir / e.llr), read_png_rgb(dir / e.gt)});
  }
  return set;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

}  // namespace

std::vector<LlrPair> load_pairs(const fs::path& dataset_dir, std::optional<Split> split) {
  return load_manifest_pairs(dataset_dir, split).pairs;
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  if (config.dataset.empty()) throw ConfigError("train config lacks a dataset path");
  const std::vector<LlrPair> data = load_pairs(config.dataset, Split::kTrain);
  if (data.empty()) throw ConfigError("dataset has no train split: " + config.dataset.string());
  const FeatureExtractor phi =
      config.feature_extractor ? FeatureExtractor::from_file(*config.feature_extractor) : FeatureExtractor::fixed_random();

  TrainConfig run = config;
  run.seed = config.resolved_seed();
  ModelConfig mc = run.model;
  mc.seed = derive_seed(*run.seed, "model");
  L2RirNet model(mc);

  fs::create_directories(run.output_dir);
  {
    std::ofstream cfg(run.output_dir / "config.json");
    cfg << to_json(run).dump(2) << '\n';
  }
  std::ofstream curve(run.output_dir / "loss_curve.csv");
  if (!curve) throw IoError("cannot write loss curve in " + run.output_dir.string());
  curve << "step,L_P,L_R,L,lr\n";

  TrainHooks hooks;
  hooks.on_step = [&](const StepLog& s) {
    curve << s.step << ',' << fmt(s.l_p) << ',' << fmt(s.l_r) << ',' << fmt(s.total) << ',' << fmt(s.lr) << '\n';
  };
  const nlohmann::json extra = {{"train", to_json(run)}};
  hooks.on_epoch_end = [&](int epoch, const L2RirNet& m) {
    curve.flush();
    const nlohmann::json ex = {{"train", to_json(run)}, {"epoch", epoch}};
    save_model(run.output_dir / "checkpoint_latest.l2r", m, ex);
    if (run.checkpoint_every > 0 && (epoch + 1) % run.checkpoint_every == 0) {
      std::ostringstream name;
      name << "epoch_" << std::setw(4) << std::setfill('0') << epoch + 1 << ".l2r";
      save_model(run.output_dir / name.str(), m, ex);
    }
  };
  try {
    TrainResult result = train_model(model, data, run, phi, hooks);
    save_model(run.output_dir / "final.l2r", model, extra);
    return result;
  } catch (const NumericError& ex) {
    curve.flush();
    std::ofstream diag(run.output_dir / "diagnostic.json");
    diag << nlohmann::json{{"error", ex.what()}, {"config", to_json(run)}}.dump(2) << '\n';
    throw;
  }
}

double median_runtime_ms(const L2RirNet& model, int size, int runs) {
  if (size < 1 || runs < 1) throw InvalidArgumentError("runtime measurement needs size >= 1 and runs >= 1");
  Rng rng(derive_seed(0, "runtime"));
  RGBImage img(size, size);
  for (double& v : img.values()) v = rng.uniform();
  (void)model.restore(img);
  std::vector<double> times;
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    (void)model.restore(img);
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

namespace {

std::optional<double> column_mean(const std::vector<ImageMetrics>& rows, std::optional<double> ImageMetrics::*field) {
  if (rows.empty() || !(rows.front().*field)) return std::nullopt;
  double sum = 0.0;
  for (const auto& r : rows) sum += *(r.*field);
  return sum / static_cast<double>(rows.size());
}

void finish_report(MetricsReport& report, const L2RirNet& model, const EvalOptions& options) {
  report.mean_psnr = column_mean(report.rows, &ImageMetrics::psnr);
  report.mean_ssim = column_mean(report.rows, &ImageMetrics::ssim);
  report.mean_niqe = column_mean(report.rows, &ImageMetrics::niqe);
  report.params_millions = static_cast<double>(model.parameter_count()) / 1e6;
  report.psnr_mode = options.psnr_mode;
  report.scored_inputs = options.score_inputs;
  if (options.runtime_runs > 0) report.runtime_ms = median_runtime_ms(model, options.runtime_size, options.runtime_runs);
  if (options.output_dir) write_report(*options.output_dir, report);
}

std::optional<NiqeModel> niqe_model_for(const EvalOptions& options) {
  if (!options.niqe) return std::nullopt;
  if (!options.niqe_model) throw ConfigError("niqe requested without a model file");
  return load_niqe_model(*options.niqe_model);
}

std::vector<fs::path> png_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

MetricsReport evaluate_pairs(const L2RirNet& model, std::span<const LlrPair> pairs, const std::vector<std::string>& ids,
                             const EvalOptions& options) {
  if (ids.size() != pairs.size()) throw InvalidArgumentError("evaluate_pairs: one id per pair required");
  const auto niqe_model = niqe_model_for(options);
  MetricsReport report;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const RGBImage out = options.score_inputs ? pairs[i].llr : model.restore(pairs[i].llr);
    ImageMetrics row{ids[i], {}, {}, {}};
    if (options.psnr) row.psnr = psnr(out, pairs[i].gt, options.psnr_mode);
    if (options.ssim) row.ssim = ssim(out, pairs[i].gt);
    if (niqe_model) row.niqe = niqe(out, *niqe_model);
    report.rows.push_back(row);
  }
  finish_report(report, model, options);
  return report;
}

MetricsReport evaluate(const L2RirNet& model, const fs::path& dataset, const EvalOptions& options) {
  if (!fs::is_directory(dataset)) throw ConfigError("dataset directory not found: " + dataset.string());
  if (fs::exists(dataset / "manifest.json")) {
    LoadedSet set = load_manifest_pairs(dataset, options.split);
    if (set.pairs.empty()) throw ConfigError("dataset split is empty: " + dataset.string());
    return evaluate_pairs(model, set.pairs, set.ids, options);
  }
  if (options.psnr || options.ssim) {
    throw ConfigError("paired metrics requested on an unpaired directory: " + dataset.string());
  }
  const auto niqe_model = niqe_model_for(options);
  if (!niqe_model) throw ConfigError("no metric requested");
  const auto files = png_files(dataset);
  if (files.empty()) throw ConfigError("no PNG images in " + dataset.string());
  MetricsReport report;
  for (const auto& f : files) {
    const RGBImage img = read_png_rgb(f);
    const RGBImage out = options.score_inputs ? img : model.restore(img);
    report.rows.push_back({f.stem().string(), {}, {}, niqe(out, *niqe_model)});
  }
  finish_report(report, model, options);
  return report;
}

nlohmann::json to_json(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"id", row.id}, {"psnr", opt(row.psnr)}, {"ssim", opt(row.ssim)}, {"niqe", opt(row.niqe)}});
  }
  return {{"count", r.rows.size()},
          {"mean_psnr", opt(r.mean_psnr)},
          {"mean_ssim", opt(r.mean_ssim)},
          {"mean_niqe", opt(r.mean_niqe)},
          {"runtime_ms", opt(r.runtime_ms)},
          {"params_millions", r.params_millions},
          {"psnr_mode", to_string(r.psnr_mode)},
          {"scored_inputs", r.scored_inputs},
          {"rows", rows}};
}

void write_report(const fs::path& dir, const MetricsReport& report) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "metrics.csv");
  if (!csv) throw IoError("cannot write metrics in " + dir.string());
  auto cell = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  csv << "id,psnr,ssim,niqe\n";
  for (const auto& row : report.rows) {
    csv << row.id << ',' << cell(row.psnr) << ',' << cell(row.ssim) << ',' << cell(row.niqe) << '\n';
  }
  std::ofstream json(dir / "metrics.json");
  json << to_json(report).dump(2) << '\n';
}

InferResult infer(const L2RirNet& model, const fs::path& input_dir, const fs::path& output_dir) {
  if (!fs::is_directory(input_dir)) throw IoError("input directory not found: " + input_dir.string());
  const auto files = png_files(input_dir);
  if (files.empty()) throw InsufficientDataError("no PNG images in " + input_dir.string());
  fs::create_directories(output_dir);
  InferResult result;
  for (const auto& f : files) {
    RGBImage img;
    try {
      img = read_png_rgb(f);
    } catch (const IoError& ex) {
      result.warnings.push_back("skipped " + f.filename().string() + ": " + ex.what());
      continue;
    }
    const fs::path out = output_dir / f.filename();
    write_png(out, model.restore(img));
    result.written.push_back(out);
  }
  return result;
}

}  // namespace l2rir
