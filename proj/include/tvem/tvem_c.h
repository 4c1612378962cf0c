#ifndef TVEM_C_H
#define TVEM_C_H

/*
 * C interface to the truncated variational EM library. All functions are
 * thread-compatible: distinct handles may be used from distinct threads,
 * a single handle must not be shared without external locking.
 *
 * Status values double as process exit codes for the CLI:
 *   0 ok, 2 input/config error, 3 max iterations reached without
 *   convergence, 4 monotonicity violation in assert mode, 5 internal error.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef _WIN32
#define TVEM_API __declspec(dllexport)
#else
#define TVEM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tvem_status {
  TVEM_OK = 0,
  TVEM_ERR_INPUT = 2,
  TVEM_ERR_NOT_CONVERGED = 3,
  TVEM_ERR_MONOTONICITY = 4,
  TVEM_ERR_INTERNAL = 5
} tvem_status;

TVEM_API const char* tvem_version(void);

/* Message for the most recent failing call on this thread; empty string
 * when the last call succeeded. The pointer stays valid until the next
 * library call from the same thread. */
TVEM_API const char* tvem_last_error(void);

/* Frees strings returned through out-parameters below. */
TVEM_API void tvem_string_free(char* s);

/* File-level commands. Config arguments take JSON text, not paths. */
TVEM_API tvem_status tvem_generate(const char* config_json,
                                   const char* out_dir);
TVEM_API tvem_status tvem_train(const char* data_csv_path,
                                const char* config_json, const char* out_dir);
TVEM_API tvem_status tvem_compare(const char* data_csv_path,
                                  const char* config_json,
                                  const char* out_json_path);
TVEM_API tvem_status tvem_eval(const char* data_csv_path,
                               const char* params_json,
                               const char* config_json_or_null,
                               const char* out_json_path);

/* Incremental training through an opaque handle. */
typedef struct tvem_trainer tvem_trainer;

TVEM_API tvem_status tvem_trainer_create(const char* data_csv_path,
                                         const char* config_json,
                                         tvem_trainer** out);
TVEM_API tvem_status tvem_trainer_step(tvem_trainer* t);
TVEM_API tvem_status tvem_trainer_run(tvem_trainer* t);
TVEM_API tvem_status tvem_trainer_free_energy(tvem_trainer* t, double* out);
TVEM_API tvem_status tvem_trainer_iteration(tvem_trainer* t, int* out);

/* Current parameters as a JSON document; release with tvem_string_free. */
TVEM_API tvem_status tvem_trainer_params(tvem_trainer* t, char** out_json);

TVEM_API void tvem_trainer_destroy(tvem_trainer* t);

#ifdef __cplusplus
}
#endif

#endif
