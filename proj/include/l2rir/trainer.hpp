#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2rir/losses.hpp"
#include "l2rir/metrics.hpp"
#include "l2rir/model.hpp"
#include "l2rir/synthesis.hpp"

namespace l2rir {

// True unless L2RIR_DETERMINISTIC is set to "0", "false" or "off". In
// non-deterministic mode a run without an explicit seed draws one from the OS.
bool deterministic_mode();
inline constexpr const char* kDeterministicEnv = "L2RIR_DETERMINISTIC";

enum class LrSchedule { kPerStep, kPerEpoch };

struct TrainConfig {
  double lr_init = 2e-4;
  double lr_final = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int batch_size = 4;
  int crop = 64;
  int epochs = 10;
  long max_steps = 0;  // > 0 overrides epochs
  std::optional<std::uint64_t> seed;
  ModelConfig model;
  LossWeights weights;
  LrSchedule schedule = LrSchedule::kPerStep;
  bool freeze_pnet = false;
  int checkpoint_every = 1;  // numbered snapshot every N epochs; 0 keeps only the latest
  std::filesystem::path dataset;  // directory holding manifest.json
  std::filesystem::path output_dir = "runs/default";
  std::optional<std::filesystem::path> feature_extractor;  // archive; fixed-random when unset

  // Throws ConfigError.
  void validate() const;
  std::uint64_t resolved_seed() const;
};

// "desk" (batch 4, crop 64, 10 epochs) or "full" (batch 24, crop 256,
// 200 epochs). Throws ConfigError for other names.
TrainConfig train_preset(const std::string& name);
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

// lr_init + (lr_final - lr_init) * t / T; T = 0 yields lr_init.
double lr_at(long t, long total, double lr_init, double lr_final);

struct StepLog {
  long step = 0;
  int epoch = 0;
  double l_p = 0.0;
  double l_r = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<StepLog> log;
  long steps = 0;
  int epochs = 0;
};

struct TrainHooks {
  std::function<void(const StepLog&)> on_step;
  std::function<void(int epoch, const L2RirNet& model)> on_epoch_end;
};

// Trains model in place on in-memory pairs. Each step draws random crops
// from a per-epoch seeded stream, builds x_aug by a geometric transform of the
// crop and minimizes lambda_p * L_P + lambda_r * L_R. Throws NumericError on a
// non-finite loss, ConfigError for images smaller than the crop.
TrainResult train_model(L2RirNet& model, std::span<const LlrPair> data, const TrainConfig& config,
                        const FeatureExtractor& phi, const TrainHooks& hooks = {});

// Loads the train split of config.dataset, trains and writes into
// output_dir: config.json, loss_curve.csv, checkpoint_latest.l2r,
// epoch_<n>.l2r snapshots and final.l2r. On a non-finite loss a
// diagnostic.json is written before the NumericError propagates.
TrainResult train(const TrainConfig& config);

std::vector<LlrPair> load_pairs(const std::filesystem::path& dataset_dir, std::optional<Split> split);

struct EvalOptions {
  bool psnr = true;
  bool ssim = true;
  bool niqe = false;
  std::optional<std::filesystem::path> niqe_model;
  PsnrMode psnr_mode = PsnrMode::kRgb;
  std::optional<Split> split = Split::kTest;  // nullopt: every manifest entry
  bool score_inputs = false;  // score the degraded inputs instead of restorations
  int runtime_size = 512;
  int runtime_runs = 10;  // 0 skips timing
  std::optional<std::filesystem::path> output_dir;  // writes metrics.csv and metrics.json
};

struct ImageMetrics {
  std::string id;
  std::optional<double> psnr;
  std::optional<double> ssim;
  std::optional<double> niqe;
};

struct MetricsReport {
  std::vector<ImageMetrics> rows;
  std::optional<double> mean_psnr;
  std::optional<double> mean_ssim;
  std::optional<double> mean_niqe;
  std::optional<double> runtime_ms;  // median per runtime_size^2 image
  double params_millions = 0.0;
  PsnrMode psnr_mode = PsnrMode::kRgb;
  bool scored_inputs = false;
};

// dataset is either a directory with manifest.json (paired) or a bare
// directory of PNGs (unpaired; only NIQE allowed). Throws ConfigError when
// paired metrics are requested on unpaired data.
MetricsReport evaluate(const L2RirNet& model, const std::filesystem::path& dataset, const EvalOptions& options);
MetricsReport evaluate_pairs(const L2RirNet& model, std::span<const LlrPair> pairs, const std::vector<std::string>& ids,
                             const EvalOptions& options);

double median_runtime_ms(const L2RirNet& model, int size, int runs);

nlohmann::json to_json(const MetricsReport& report);
void write_report(const std::filesystem::path& dir, const MetricsReport& report);

struct InferResult {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

// Restores every PNG of input_dir into output_dir under the same name.
// Unreadable files are skipped with a warning; a directory without PNGs
// throws InsufficientDataError.
InferResult infer(const L2RirNet& model, const std::filesystem::path& input_dir,
                  const std::filesystem::path& output_dir);

}  // namespace l2rir
