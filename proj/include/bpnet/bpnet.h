/* SPDX-License-Identifier: Apache-2.0 */
/**
 * @file   bpnet.h
 * @brief  C interface to the BP-Net library: signal conditioning, model
 *         handles, and directory-level synth/preprocess/train/eval commands.
 *
 * Every function returns a bpnet_status. On failure a description is
 * available from bpnet_last_error() on the calling thread until the next
 * call into the library from that thread.
 */
#ifndef BPNET_H
#define BPNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(BPNET_BUILDING_LIBRARY)
#define BPNET_API __declspec(dllexport)
#else
#define BPNET_API __declspec(dllimport)
#endif
#else
#define BPNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bpnet_status {
  BPNET_OK = 0,
  BPNET_ERR_INVALID_ARGUMENT = 1,
  BPNET_ERR_DATA = 2,
  BPNET_ERR_NUMERIC = 3,
  BPNET_ERR_IO = 4,
  BPNET_ERR_INTERNAL = 5
} bpnet_status;

typedef enum bpnet_signal_kind { BPNET_SIGNAL_ECG = 0, BPNET_SIGNAL_PPG = 1 } bpnet_signal_kind;

typedef enum bpnet_log_level {
  BPNET_LOG_INFO = 0,
  BPNET_LOG_WARNING = 1,
  BPNET_LOG_ERROR = 2
} bpnet_log_level;

/** Receives progress lines. `message` is valid only during the call. */
typedef void (*bpnet_log_fn)(bpnet_log_level level, const char *message, void *user_data);

typedef struct bpnet_model bpnet_model;

BPNET_API const char *bpnet_version(void);
BPNET_API const char *bpnet_last_error(void);
BPNET_API const char *bpnet_status_string(bpnet_status status);

/* Signal conditioning. */

/** out[i] = sign(x) ln(1 + mu|x|) / ln(1 + mu); requires |x| <= 1. */
BPNET_API bpnet_status bpnet_mu_law(const double *in, size_t n, double mu, double *out);
BPNET_API bpnet_status bpnet_mu_law_inverse(const double *in, size_t n, double mu, double *out);

/** Full denoising chain; `out` receives `n` samples at `sample_rate_hz`. */
BPNET_API bpnet_status bpnet_denoise(bpnet_signal_kind kind, const double *in, size_t n,
                                     double sample_rate_hz, double *out);

/* Models. */

/**
 * Creates a randomly initialised model. `model_config_json` is a JSON object
 * with every model field, or NULL for the default configuration.
 */
BPNET_API bpnet_status bpnet_model_create(const char *model_config_json, uint64_t seed,
                                          bpnet_model **out);
BPNET_API bpnet_status bpnet_model_load(const char *path, bpnet_model **out);
BPNET_API bpnet_status bpnet_model_save(const bpnet_model *model, const char *path);
BPNET_API void bpnet_model_free(bpnet_model *model);

BPNET_API bpnet_status bpnet_model_receptive_field(const bpnet_model *model, size_t *out);
BPNET_API bpnet_status bpnet_model_parameter_count(const bpnet_model *model, size_t *out);

/**
 * Inference on already-normalised inputs. ecg and ppg are [batch][length];
 * out receives [batch][2][length] normalised (SBP, DBP).
 */
BPNET_API bpnet_status bpnet_model_forward(const bpnet_model *model, const double *ecg,
                                           const double *ppg, size_t batch, size_t length,
                                           double *out);

/**
 * Per-sample SBP and DBP in mmHg for one preprocessed 125 Hz recording of
 * `length` samples, windowed with `window_len` (0 selects the default).
 */
BPNET_API bpnet_status bpnet_model_predict(const bpnet_model *model, const double *ecg,
                                           const double *ppg, size_t length, size_t window_len,
                                           double *sbp, double *dbp);

/* Directory commands. */

BPNET_API bpnet_status bpnet_synth_dataset(const char *out_dir, size_t subjects, uint64_t seed,
                                           double duration_s);

typedef struct bpnet_preprocess_summary {
  size_t files_seen;
  size_t files_written;
  size_t failures;
} bpnet_preprocess_summary;

/**
 * Per-file failures are reported through `log` at BPNET_LOG_ERROR as
 * "<file>: <reason>" and counted in `summary`; the call itself still
 * returns BPNET_OK unless the directories are unusable.
 */
BPNET_API bpnet_status bpnet_preprocess_dir(const char *in_dir, const char *out_dir,
                                            bpnet_log_fn log, void *user_data,
                                            bpnet_preprocess_summary *summary);

BPNET_API bpnet_status bpnet_train_dir(const char *data_dir, const char *config_path,
                                       const char *out, int resume, int per_subject,
                                       bpnet_log_fn log, void *user_data,
                                       double *final_valid_loss);

BPNET_API bpnet_status bpnet_eval_dir(const char *checkpoint, const char *data_dir,
                                      const char *report_dir, bpnet_log_fn log,
                                      void *user_data);

#ifdef __cplusplus
}
#endif

#endif /* BPNET_H */
