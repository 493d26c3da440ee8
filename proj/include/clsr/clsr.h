#ifndef CLSR_CLSR_H
#define CLSR_CLSR_H

/* C interface to the clsr similarity engine.
 *
 * Every function returns a clsr_status. On failure a one-line description is
 * available from clsr_last_error() until the next call on the same thread.
 * Handles are opaque; free each with its matching *_free function (NULL is
 * accepted). Config arguments are JSON documents (NULL or "" = defaults).
 * Situation values are row-major steps x channels floats; NaN marks a missing
 * sample and is replaced by the sentinel before embedding. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CLSR_API __declspec(dllexport)
#else
#define CLSR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum clsr_status {
  CLSR_OK = 0,
  CLSR_ERR_CONFIG = 1,
  CLSR_ERR_SHAPE = 2,
  CLSR_ERR_STATE = 3,
  CLSR_ERR_NUMERIC = 4,
  CLSR_ERR_INPUT = 5,
  CLSR_ERR_IO = 6,
  CLSR_ERR_FORMAT = 7,
  CLSR_ERR_EMPTY_DATASET = 8,
  CLSR_ERR_ARGUMENT = 9,  /* NULL handle, bad index, k == 0 */
  CLSR_ERR_INTERNAL = 10
} clsr_status;

typedef struct clsr_model clsr_model;
typedef struct clsr_index clsr_index;
typedef struct clsr_db clsr_db;
typedef struct clsr_result clsr_result;

CLSR_API const char* clsr_version(void);
CLSR_API const char* clsr_status_name(clsr_status status);
CLSR_API const char* clsr_last_error(void);

/* Progress messages on stderr; on by default. */
CLSR_API void clsr_set_logging(int enabled);

/* Fully resolved configuration (defaults, preset, overrides) as JSON.
 * Release the string with clsr_string_free. */
CLSR_API clsr_status clsr_config_resolve(const char* config_json, char** out_json);
CLSR_API void clsr_string_free(char* s);

/* ---- pipeline stages (file to file) ---- */

CLSR_API clsr_status clsr_generate(const char* config_json, const char* out_dir);
CLSR_API clsr_status clsr_prepare(const char* config_json, const char* raw_path, const char* out_dir);
CLSR_API clsr_status clsr_train(const char* config_json, const char* train_pairs_path, const char* val_pairs_path,
                                const char* out_dir);
CLSR_API clsr_status clsr_embed(const char* model_path, const char* situations_path, const char* index_path);
/* Evaluates n named checkpoints plus the L2 baseline on a labeled database. */
CLSR_API clsr_status clsr_evaluate(const char* config_json, const char* const* names,
                                   const char* const* model_paths, size_t n, const char* situations_path,
                                   const char* tasks_path, const char* out_dir);
CLSR_API clsr_status clsr_reproduce(const char* config_json, const char* out_dir);

/* ---- models ---- */

CLSR_API clsr_status clsr_model_load(const char* path, clsr_model** out);
CLSR_API void clsr_model_free(clsr_model* model);
CLSR_API clsr_status clsr_model_info(const clsr_model* model, size_t* steps, size_t* channels, size_t* embedding);
/* out receives n x embedding floats; rows are unit length when normalize != 0. */
CLSR_API clsr_status clsr_model_embed(const clsr_model* model, const float* values, size_t n, float sentinel,
                                      int normalize, float* out);

/* ---- situation databases (JSONL) ---- */

CLSR_API clsr_status clsr_db_load(const char* situations_path, clsr_db** out);
CLSR_API void clsr_db_free(clsr_db* db);
CLSR_API size_t clsr_db_size(const clsr_db* db);
CLSR_API const char* clsr_db_id(const clsr_db* db, size_t i);

/* ---- embedding indexes ---- */

CLSR_API clsr_status clsr_index_build(const clsr_model* model, const clsr_db* db, clsr_index** out);
CLSR_API clsr_status clsr_index_load(const char* path, clsr_index** out);
CLSR_API clsr_status clsr_index_save(const clsr_index* index, const char* path);
CLSR_API void clsr_index_free(clsr_index* index);
CLSR_API size_t clsr_index_size(const clsr_index* index);
CLSR_API size_t clsr_index_dim(const clsr_index* index);

/* Top-k by cosine similarity; the query's own id is excluded. */
CLSR_API clsr_status clsr_index_query_id(const clsr_index* index, const char* id, size_t k, clsr_result** out);
CLSR_API clsr_status clsr_index_query_values(const clsr_index* index, const clsr_model* model, const float* values,
                                             float sentinel, size_t k, clsr_result** out);
/* Top-k by Euclidean distance over imputed values (score = -distance). */
CLSR_API clsr_status clsr_l2_query_id(const clsr_db* db, const char* id, size_t k, clsr_result** out);

/* ---- results (best first) ---- */

CLSR_API size_t clsr_result_size(const clsr_result* result);
/* Nonzero when fewer than the requested k items were available. */
CLSR_API int clsr_result_truncated(const clsr_result* result);
CLSR_API const char* clsr_result_id(const clsr_result* result, size_t i);
CLSR_API double clsr_result_score(const clsr_result* result, size_t i);
CLSR_API void clsr_result_free(clsr_result* result);

#ifdef __cplusplus
}
#endif

#endif /* CLSR_CLSR_H */
