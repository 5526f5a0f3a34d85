/*
 * Copyright 2026 The rsmc Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the rsmc library. All handles are opaque; every call that
 * can fail returns an rsmc_status and records a message retrievable with
 * rsmc_last_error() on the calling thread. */

#ifndef RSMC_RSMC_H_
#define RSMC_RSMC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(RSMC_BUILDING_LIBRARY)
#define RSMC_API __attribute__((visibility("default")))
#else
#define RSMC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rsmc_status {
  RSMC_OK = 0,
  RSMC_ERR_USAGE = 2,   /* bad configuration, arguments or preconditions */
  RSMC_ERR_NUMERIC = 3, /* NaN/Inf during training */
  RSMC_ERR_IO = 4,      /* missing or unwritable file */
  RSMC_ERR_FORMAT = 5,  /* malformed file contents */
  RSMC_ERR_INTERNAL = 6
} rsmc_status;

typedef struct rsmc_config rsmc_config;
typedef struct rsmc_dataset rsmc_dataset;

RSMC_API const char* rsmc_version(void);
/* Message of the last failed call on this thread ("" if none). */
RSMC_API const char* rsmc_last_error(void);
/* Fold index of the last RSMC_ERR_NUMERIC, -1 otherwise. */
RSMC_API int rsmc_last_error_fold(void);

/* Configuration: defaults < file < RSMC_SEED < rsmc_config_set. */
RSMC_API rsmc_status rsmc_config_create(rsmc_config** out);
RSMC_API void rsmc_config_destroy(rsmc_config* config);
RSMC_API rsmc_status rsmc_config_load_file(rsmc_config* config, const char* path);
RSMC_API rsmc_status rsmc_config_apply_env(rsmc_config* config);
RSMC_API rsmc_status rsmc_config_set(rsmc_config* config, const char* key, const char* value);
/* String results are copied into buf (NUL-terminated, truncated to cap);
 * *needed, when non-null, receives the full length including the NUL. */
RSMC_API rsmc_status rsmc_config_get(const rsmc_config* config, const char* key, char* buf, size_t cap,
                                     size_t* needed);
RSMC_API rsmc_status rsmc_config_echo(const rsmc_config* config, uint32_t time, char* buf, size_t cap,
                                      size_t* needed);
RSMC_API rsmc_status rsmc_config_validate(const rsmc_config* config);

typedef struct rsmc_synth_spec {
  uint32_t subjects;
  uint32_t classes;
  uint32_t per_subject;
  uint32_t window;
  double snr;
  double shift;
  uint64_t seed;
} rsmc_synth_spec;

typedef struct rsmc_shape {
  uint32_t batch;
  uint32_t time;
  uint32_t features;
  uint32_t classes;
  uint32_t subjects;
} rsmc_shape;

RSMC_API void rsmc_synth_spec_default(rsmc_synth_spec* spec);
RSMC_API rsmc_status rsmc_dataset_synthesize(const rsmc_synth_spec* spec, rsmc_dataset** out);
RSMC_API rsmc_status rsmc_dataset_load(const char* path, rsmc_dataset** out);
RSMC_API rsmc_status rsmc_dataset_save(const rsmc_dataset* dataset, const char* path);
RSMC_API rsmc_status rsmc_dataset_shape(const rsmc_dataset* dataset, rsmc_shape* out);
RSMC_API void rsmc_dataset_destroy(rsmc_dataset* dataset);

typedef struct rsmc_mean_std {
  double mean;
  double std;
} rsmc_mean_std;

typedef struct rsmc_fold_summary {
  int held_out_subject;
  double accuracy;
  double f1;
  double sensitivity;
  double specificity;
  int epochs_run;
} rsmc_fold_summary;

typedef struct rsmc_loso_summary {
  size_t folds;
  rsmc_mean_std accuracy;
  rsmc_mean_std f1;
  rsmc_mean_std sensitivity;
  rsmc_mean_std specificity;
} rsmc_loso_summary;

/* Receives one human-readable progress line at a time. */
typedef void (*rsmc_progress_fn)(const char* line, void* user);

/* Runs LOSO on the configured data source (dataset=<path>, or synth=true)
 * and writes reports under run_dir (NULL: the config's output key). */
RSMC_API rsmc_status rsmc_loso_run(const rsmc_config* config, const char* run_dir, rsmc_progress_fn progress,
                                   void* user, rsmc_loso_summary* out);

/* One source/target split; held_out_subject < 0 selects the highest id. */
RSMC_API rsmc_status rsmc_train_fold(const rsmc_config* config, int held_out_subject, const char* run_dir,
                                     rsmc_fold_summary* out);

/* Tiny-model finite-difference check of the full objective. */
RSMC_API rsmc_status rsmc_gradcheck(size_t probes, uint64_t seed, int force_dropout, double* worst_rel_error);

/* Canonical electrode table as label,region CSV; path "-" is stdout. */
RSMC_API rsmc_status rsmc_topology_dump(const char* path);

/* Local and sparse masks as 0/1 CSV. period 0 selects max(1, T/4).
 * out_dir "-" prints both to stdout, each preceded by a "# kind" line. */
RSMC_API rsmc_status rsmc_dump_masks(uint32_t time, int32_t window, int32_t period, const char* out_dir);

/* Exports write CSVs under <run_dir>/exports. */
RSMC_API rsmc_status rsmc_export_masks(const char* run_dir);
RSMC_API rsmc_status rsmc_export_confusion(const char* run_dir);
RSMC_API rsmc_status rsmc_export_spatial_attention(const char* run_dir, int subject);

#ifdef __cplusplus
}
#endif

#endif /* RSMC_RSMC_H_ */
