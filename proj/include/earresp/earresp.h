// Copyright 2026 The earresp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EARRESP_EARRESP_H_
#define EARRESP_EARRESP_H_

/* C interface to the earresp library. Every call returns a status code; on
 * failure, earresp_last_error() describes the most recent error on the
 * calling thread. Handles are opaque and owned by the caller, who releases
 * them with the matching *_destroy function (NULL is accepted). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define EARRESP_API __declspec(dllexport)
#else
#define EARRESP_API __attribute__((visibility("default")))
#endif

typedef enum earresp_status {
  EARRESP_OK = 0,
  EARRESP_ERR_PARAMETER = 1,
  EARRESP_ERR_ALIGNMENT = 2,
  EARRESP_ERR_DIVERGENCE = 3,
  EARRESP_ERR_INSUFFICIENT_DATA = 4,
  EARRESP_ERR_DEGENERATE = 5,
  EARRESP_ERR_FORMAT = 6,
  EARRESP_ERR_IO = 7,
  EARRESP_ERR_UNDEFINED_METRIC = 8,
  EARRESP_ERR_INTERNAL = 99
} earresp_status;

typedef enum earresp_encoding {
  EARRESP_PCM16 = 0,
  EARRESP_PCM24 = 1,
  EARRESP_FLOAT32 = 2
} earresp_encoding;

typedef struct earresp_config earresp_config;
typedef struct earresp_audio earresp_audio;
typedef struct earresp_ans earresp_ans;
typedef struct earresp_records earresp_records;
typedef struct earresp_report earresp_report;
typedef struct earresp_manifest earresp_manifest;

EARRESP_API const char* earresp_version(void);
EARRESP_API const char* earresp_status_name(earresp_status status);
/* Message of the last failed call on this thread; "" if none. */
EARRESP_API const char* earresp_last_error(void);

/* --- configuration ------------------------------------------------------ */

EARRESP_API earresp_status earresp_config_create(earresp_config** out);
EARRESP_API void earresp_config_destroy(earresp_config* config);
EARRESP_API earresp_status earresp_config_load(earresp_config* config,
                                               const char* path);
/* Keys are "section.name", e.g. "ans.step_size". */
EARRESP_API earresp_status earresp_config_set(earresp_config* config,
                                              const char* key,
                                              const char* value);
/* Copies the value into buf (NUL-terminated, truncated to size). *needed
 * receives the full length including the terminator; either may be NULL. */
EARRESP_API earresp_status earresp_config_get(const earresp_config* config,
                                              const char* key, char* buf,
                                              size_t size, size_t* needed);
EARRESP_API earresp_status earresp_config_write(const earresp_config* config,
                                                const char* path);

/* --- audio --------------------------------------------------------------- */

EARRESP_API earresp_status earresp_audio_read(const char* path,
                                              earresp_audio** out);
EARRESP_API earresp_status earresp_audio_create(const double* samples,
                                                size_t count,
                                                double sample_rate_hz,
                                                earresp_audio** out);
/* The sample pointer stays valid until the handle is destroyed. */
EARRESP_API earresp_status earresp_audio_data(const earresp_audio* audio,
                                              const double** samples,
                                              size_t* count,
                                              double* sample_rate_hz);
EARRESP_API earresp_status earresp_audio_write(const earresp_audio* audio,
                                               const char* path,
                                               earresp_encoding encoding);
EARRESP_API void earresp_audio_destroy(earresp_audio* audio);

/* --- adaptive noise suppression ------------------------------------------ */

/* Streaming processor at the given rate, configured from the [ans] keys. */
EARRESP_API earresp_status earresp_ans_create(const earresp_config* config,
                                              double sample_rate_hz,
                                              earresp_ans** out);
/* Processes one block; iem, oem and out hold count samples each. */
EARRESP_API earresp_status earresp_ans_process(earresp_ans* ans,
                                               const double* iem,
                                               const double* oem, double* out,
                                               size_t count);
EARRESP_API earresp_status earresp_ans_delay(const earresp_ans* ans,
                                             double* delay_samples);
EARRESP_API earresp_status earresp_ans_reset(earresp_ans* ans);
EARRESP_API void earresp_ans_destroy(earresp_ans* ans);

/* Whole-signal convenience: decimates both inputs to ans.sample_rate_hz when
 * they are at an integer multiple of it, then runs the processor. */
EARRESP_API earresp_status earresp_denoise(const earresp_config* config,
                                           const earresp_audio* iem,
                                           const earresp_audio* oem,
                                           earresp_audio** out);

/* 10 log10(sum cleaned^2 / sum original^2). */
EARRESP_API earresp_status earresp_noise_reduction_db(
    const earresp_audio* cleaned, const earresp_audio* original,
    double* out_db);
/* Respiratory-information index of audio against a belt recording; k from
 * the evaluation.ri_k key. */
EARRESP_API earresp_status earresp_ri_index(const earresp_config* config,
                                            const earresp_audio* audio,
                                            const earresp_audio* belt,
                                            double* out);

/* --- window records ----------------------------------------------------- */

typedef struct earresp_window_record {
  int window_index;
  double start_s;
  int has_left, has_right, has_fused, has_gt;
  double rr_left, rr_right, rr_fused, discrepancy, gt_cpm;
  int accepted;
  int gt_valid;
} earresp_window_record;

/* Per-window estimates for one or two ears (right may be NULL), fused and
 * flagged with the configured fusion.tau_cpm. */
EARRESP_API earresp_status earresp_estimate(const earresp_config* config,
                                            const earresp_audio* left,
                                            const earresp_audio* right,
                                            earresp_records** out);
/* Attaches belt-derived reference rates using the [ground_truth] keys. */
EARRESP_API earresp_status earresp_records_attach_belt(
    earresp_records* records, const earresp_config* config,
    const earresp_audio* belt);
EARRESP_API earresp_status earresp_records_reject(earresp_records* records,
                                                  double tau_cpm,
                                                  double* retained_fraction);
EARRESP_API earresp_status earresp_records_count(const earresp_records* records,
                                                 size_t* count);
EARRESP_API earresp_status earresp_records_get(const earresp_records* records,
                                               size_t index,
                                               earresp_window_record* out);
EARRESP_API earresp_status earresp_records_read(const char* path,
                                                earresp_records** out);
EARRESP_API earresp_status earresp_records_write(const earresp_records* records,
                                                 const char* path);
EARRESP_API void earresp_records_destroy(earresp_records* records);

/* --- evaluation ---------------------------------------------------------- */

/* sessions[i] is labelled subjects[i] / conditions[i]. nr_db and ri may be
 * NULL when unavailable. */
EARRESP_API earresp_status earresp_report_build(
    const earresp_records* const* sessions, const char* const* subjects,
    const char* const* conditions, size_t session_count, double tau_cpm,
    const double* nr_db, const double* ri, earresp_report** out);
/* Scalar field by name, e.g. "mae_cpm"; NaN when undefined. */
EARRESP_API earresp_status earresp_report_get(const earresp_report* report,
                                              const char* field, double* out);
EARRESP_API earresp_status earresp_report_write(const earresp_report* report,
                                                const char* path);
EARRESP_API void earresp_report_destroy(earresp_report* report);

/* tau_grid is "start:step:stop" or a comma-separated list. */
EARRESP_API earresp_status earresp_sweep_write(const earresp_records* records,
                                               const char* tau_grid,
                                               const char* path);

/* --- sessions ------------------------------------------------------------ */

EARRESP_API earresp_status earresp_manifest_load(const char* path,
                                                 earresp_manifest** out);
/* Fields: subject, condition, left_iem, left_oem, right_iem, right_oem, belt.
 * Missing files yield "". The pointer lives as long as the handle. */
EARRESP_API earresp_status earresp_manifest_get(const earresp_manifest* manifest,
                                                const char* field,
                                                const char** value);
EARRESP_API earresp_status earresp_manifest_apply(
    const earresp_manifest* manifest, earresp_config* config);
EARRESP_API void earresp_manifest_destroy(earresp_manifest* manifest);

/* --- synthetic scenarios ------------------------------------------------- */

typedef struct earresp_synth_params {
  double rate_cpm;
  double duration_s;
  double sample_rate_hz;
  const char* noise_kind; /* white, band-limited, cafeteria, music */
  double snr_db;          /* +INFINITY: no noise */
  uint64_t seed;
  const char* subject;
  const char* condition; /* NULL: the noise kind */
} earresp_synth_params;

EARRESP_API void earresp_synth_defaults(earresp_synth_params* params);
/* Writes left/right IEM and OEM, the belt, truth.csv and manifest.ini into
 * out_dir (created if needed). The ears use seeds seed and seed + 1. */
EARRESP_API earresp_status earresp_synth_write(
    const earresp_synth_params* params, const earresp_config* config,
    const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif  // EARRESP_EARRESP_H_
