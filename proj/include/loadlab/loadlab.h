/* C interface to the loadlab library. All functions report failure through a
 * status code; the message of the most recent failure on a context is
 * available from loadlab_last_error. Handles are opaque and owned by the
 * caller, who releases them with the matching *_destroy function. */
#ifndef LOADLAB_LOADLAB_H
#define LOADLAB_LOADLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(LOADLAB_BUILDING_LIBRARY)
#define LOADLAB_API __attribute__((visibility("default")))
#else
#define LOADLAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum loadlab_status {
  LOADLAB_OK = 0,
  LOADLAB_ERR_INTERNAL = 1,
  LOADLAB_ERR_CONFIG = 2,
  LOADLAB_ERR_DATA = 3,
  LOADLAB_ERR_TIMEOUT = 4 /* solver stopped at its time limit without a proof */
} loadlab_status;

typedef struct loadlab_context loadlab_context;
typedef struct loadlab_matrix loadlab_matrix;
typedef struct loadlab_model loadlab_model;

LOADLAB_API const char* loadlab_version(void);

LOADLAB_API loadlab_context* loadlab_context_create(void);
LOADLAB_API void loadlab_context_destroy(loadlab_context* ctx);
/* 0 = all hardware threads. */
LOADLAB_API void loadlab_context_set_threads(loadlab_context* ctx, unsigned threads);
/* 0 = quiet, 1 = info (default). Log lines go to stderr as JSON. */
LOADLAB_API void loadlab_set_log_level(int level);
/* Message of the last failure on ctx; empty string if none. Valid until the next call on ctx. */
LOADLAB_API const char* loadlab_last_error(const loadlab_context* ctx);

/* DTW distance (squared local cost, no window, no final root). */
LOADLAB_API loadlab_status loadlab_dtw_distance(loadlab_context* ctx, const double* x, size_t nx,
                                                const double* y, size_t ny, double* out);

/* Distance matrix over `count` 24-value profiles laid out contiguously. */
LOADLAB_API loadlab_status loadlab_matrix_from_profiles(loadlab_context* ctx, const double* hours,
                                                        size_t count, loadlab_matrix** out);
LOADLAB_API loadlab_status loadlab_matrix_load(loadlab_context* ctx, const char* path,
                                               loadlab_matrix** out);
LOADLAB_API loadlab_status loadlab_matrix_save(loadlab_context* ctx, const loadlab_matrix* m,
                                               const char* path);
LOADLAB_API size_t loadlab_matrix_size(const loadlab_matrix* m);
LOADLAB_API double loadlab_matrix_get(const loadlab_matrix* m, size_t i, size_t j);
LOADLAB_API void loadlab_matrix_destroy(loadlab_matrix* m);

/* solver: "exact" or "pam". time_limit applies to "exact"; seed to "pam". */
LOADLAB_API loadlab_status loadlab_model_solve(loadlab_context* ctx, const loadlab_matrix* m,
                                               size_t k, const char* solver, double time_limit,
                                               uint64_t seed, loadlab_model** out);
LOADLAB_API size_t loadlab_model_k(const loadlab_model* model);
LOADLAB_API size_t loadlab_model_size(const loadlab_model* model);
LOADLAB_API size_t loadlab_model_medoid(const loadlab_model* model, size_t i);
LOADLAB_API size_t loadlab_model_label(const loadlab_model* model, size_t member);
LOADLAB_API double loadlab_model_total_cost(const loadlab_model* model);
/* NaN until computed by loadlab_model_silhouette. */
LOADLAB_API loadlab_status loadlab_model_silhouette(loadlab_context* ctx, loadlab_model* model,
                                                    const loadlab_matrix* m, double* out);
LOADLAB_API int loadlab_model_proven_optimal(const loadlab_model* model);
LOADLAB_API double loadlab_model_gap(const loadlab_model* model);
LOADLAB_API void loadlab_model_destroy(loadlab_model* model);

/* Pipeline stages. `options_json` is a JSON object of stage options; on
 * success (and on LOADLAB_ERR_TIMEOUT) *report_json receives a JSON report
 * to be released with loadlab_string_free. report_json may be NULL. */
LOADLAB_API loadlab_status loadlab_stage(loadlab_context* ctx, const char* stage,
                                         const char* options_json, char** report_json);

/* Full pipeline from a JSON configuration (partial configs are merged with
 * the defaults). *manifest_json receives the run manifest. */
LOADLAB_API loadlab_status loadlab_run(loadlab_context* ctx, const char* config_json, int force,
                                       char** manifest_json);

/* Default pipeline configuration, or `config_json` merged with the defaults
 * when non-NULL. */
LOADLAB_API loadlab_status loadlab_resolve_config(loadlab_context* ctx, const char* config_json,
                                                  char** out_json);

LOADLAB_API void loadlab_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* LOADLAB_LOADLAB_H */
