#ifndef L2RIR_H
#define L2RIR_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(L2RIR_BUILDING_LIBRARY)
#define L2RIR_API __declspec(dllexport)
#else
#define L2RIR_API __declspec(dllimport)
#endif
#else
#define L2RIR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum l2r_status {
  L2R_OK = 0,
  L2R_ERR_INVALID_ARGUMENT = 1,
  L2R_ERR_DIMENSION = 2,
  L2R_ERR_DOMAIN = 3,
  L2R_ERR_BOUNDS = 4,
  L2R_ERR_INSUFFICIENT_DATA = 5,
  L2R_ERR_CONFIG = 6,
  L2R_ERR_IO = 7,
  L2R_ERR_NUMERIC = 8,
  L2R_ERR_INTERNAL = 9
} l2r_status;

typedef struct l2r_model l2r_model;

/* Message of the last failed call on this thread; "" after success. */
L2RIR_API const char* l2r_last_error(void);
L2RIR_API const char* l2r_status_string(l2r_status status);
L2RIR_API const char* l2r_version(void);
L2RIR_API int l2r_deterministic_mode(void);

/* Strings returned through char** outputs are owned by the caller. */
L2RIR_API void l2r_string_free(char* s);

/* config_json may be NULL for defaults. Keys: variant, seed, pnet, rnet. */
L2RIR_API l2r_status l2r_model_create(const char* config_json, l2r_model** out);
L2RIR_API l2r_status l2r_model_load(const char* path, l2r_model** out);
L2RIR_API l2r_status l2r_model_save(const l2r_model* model, const char* path);
L2RIR_API void l2r_model_free(l2r_model* model);
L2RIR_API l2r_status l2r_model_param_count(const l2r_model* model, size_t* out);
L2RIR_API l2r_status l2r_model_config(const l2r_model* model, char** json_out);

/* Channel-major RGB planes in [0,1], 3 * height * width values each way. */
L2RIR_API l2r_status l2r_restore(const l2r_model* model, const double* rgb, int height, int width, double* out);

/* Builds out_dir/{train,test}/{llr,gt} and manifest.json from <id>_rain.png /
   <id>_gt.png pairs. options_json: {"seed", "split_ratio", "ranges"}. */
L2RIR_API l2r_status l2r_synth(const char* src_dir, const char* out_dir, const char* options_json,
                               char** summary_json_out);

/* Full training run described by a train config JSON; writes checkpoints and
   loss_curve.csv into its output_dir. summary: steps, epochs, final losses. */
L2RIR_API l2r_status l2r_train(const char* config_json, char** summary_json_out);

/* options_json: {"metrics": ["psnr","ssim","niqe"], "niqe_model", "psnr_mode",
   "split": "train"|"test"|"all", "score_inputs", "runtime_size",
   "runtime_runs", "output_dir"}. Returns the report JSON. */
L2RIR_API l2r_status l2r_evaluate(const l2r_model* model, const char* dataset, const char* options_json,
                                  char** report_json_out);

L2RIR_API l2r_status l2r_infer_dir(const l2r_model* model, const char* input_dir, const char* output_dir,
                                   char** summary_json_out);

/* options_json: {"center": [x, y], "mask": path, "patch_size", "direction":
   [dx, dy], "r_min", "clip_level", "breakpoints": [a, b]}. Returns
   {"E0", "residual", "point_source", "breakpoints", "light": [[r, E]...],
   "rain": [[r, m]...]}. */
L2RIR_API l2r_status l2r_probe(const char* image_path, const char* options_json, char** result_json_out);

L2RIR_API l2r_status l2r_detail(const char* input_png, const char* output_png);
L2RIR_API l2r_status l2r_attention_map(const char* input_png, const char* output_png);

/* options_json: {"patch_size", "sharpness_threshold"}. */
L2RIR_API l2r_status l2r_niqe_fit(const char* pristine_dir, const char* model_path, const char* options_json,
                                  char** summary_json_out);
L2RIR_API l2r_status l2r_niqe_score(const char* image_path, const char* model_path, double* out);

#ifdef __cplusplus
}
#endif

#endif
