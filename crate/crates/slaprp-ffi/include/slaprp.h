#ifndef SLAPRP_H
#define SLAPRP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a finished solve.
 */
typedef enum SlaprpSolveStatus {
  SLAPRP_SOLVE_STATUS_OPTIMAL = 0,
  /**
   * A limit was reached with a plan in hand.
   */
  SLAPRP_SOLVE_STATUS_LIMIT = 1,
  SLAPRP_SOLVE_STATUS_NO_INCUMBENT = 2,
} SlaprpSolveStatus;

typedef enum SlaprpStatus {
  SLAPRP_STATUS_OK = 0,
  SLAPRP_STATUS_NULL_POINTER = 1,
  SLAPRP_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON, unknown option or bad option value.
   */
  SLAPRP_STATUS_PARSE = 3,
  /**
   * The instance violates an invariant.
   */
  SLAPRP_STATUS_INVALID_INSTANCE = 4,
  SLAPRP_STATUS_IO = 5,
  /**
   * The solver failed (LP backend or internal error).
   */
  SLAPRP_STATUS_SOLVE = 6,
  /**
   * No plan is available.
   */
  SLAPRP_STATUS_NO_SOLUTION = 7,
  /**
   * A caller buffer is too small.
   */
  SLAPRP_STATUS_BUFFER_TOO_SMALL = 8,
  SLAPRP_STATUS_PANIC = 9,
} SlaprpStatus;

typedef struct SlaprpConfig SlaprpConfig;

typedef struct SlaprpInstance SlaprpInstance;

typedef struct SlaprpResult SlaprpResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *slaprp_last_error(void);

/**
 * Library version as a static string.
 */
const char *slaprp_version(void);

/**
 * Parses an instance from canonical JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SlaprpStatus slaprp_instance_from_json(const char *json, struct SlaprpInstance **out);

/**
 * Loads an instance file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SlaprpStatus slaprp_instance_load(const char *path, struct SlaprpInstance **out);

/**
 * Number of SKUs, orders and locations; any output pointer may be null.
 *
 * # Safety
 * `inst` must be a live handle.
 */
enum SlaprpStatus slaprp_instance_size(const struct SlaprpInstance *inst,
                                       size_t *skus,
                                       size_t *orders,
                                       size_t *locations);

/**
 * # Safety
 * `inst` must be null or a handle not yet freed.
 */
void slaprp_instance_free(struct SlaprpInstance *inst);

/**
 * Default solver options.
 */
struct SlaprpConfig *slaprp_config_new(void);

/**
 * Sets one option, using the same keys as the command-line config file
 * (`policy`, `branching`, `symmetry`, `time_limit`, ...).
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum SlaprpStatus slaprp_config_set(struct SlaprpConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void slaprp_config_free(struct SlaprpConfig *cfg);

/**
 * Solves an instance. `Ok` means the search ran; query the outcome with
 * [`slaprp_result_status`]. A null `cfg` uses the defaults.
 *
 * # Safety
 * `inst` must be a live handle, `cfg` null or a live handle, `out` writable.
 */
enum SlaprpStatus slaprp_solve(const struct SlaprpInstance *inst,
                               const struct SlaprpConfig *cfg,
                               struct SlaprpResult **out);

/**
 * # Safety
 * `res` must be a live handle and `out` writable.
 */
enum SlaprpStatus slaprp_result_status(const struct SlaprpResult *res, enum SlaprpSolveStatus *out);

/**
 * Best objective, lower bound and processed node count. `objective` is only
 * written when a plan exists; any output pointer may be null.
 *
 * # Safety
 * `res` must be a live handle.
 */
enum SlaprpStatus slaprp_result_bounds(const struct SlaprpResult *res,
                                       int64_t *objective,
                                       int64_t *lower_bound,
                                       size_t *nodes);

/**
 * Copies the location of every SKU (in instance order) into `buf`.
 * `len` is read as the buffer size and overwritten with the SKU count.
 *
 * # Safety
 * `res` must be a live handle, `len` writable, `buf` valid for `*len` writes.
 */
enum SlaprpStatus slaprp_result_assignment(const struct SlaprpResult *res,
                                           size_t *buf,
                                           size_t *len);

/**
 * Solution file JSON (assignment, routes, costs, stats). The string is owned
 * by the caller and must be released with [`slaprp_string_free`].
 *
 * # Safety
 * `res` must be a live handle and `out` writable.
 */
enum SlaprpStatus slaprp_result_solution_json(const struct SlaprpResult *res, char **out);

/**
 * Name of a solve outcome, e.g. `optimal`; static storage.
 */
const char *slaprp_solve_status_name(enum SlaprpSolveStatus s);

/**
 * # Safety
 * `res` must be null or a handle not yet freed.
 */
void slaprp_result_free(struct SlaprpResult *res);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void slaprp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLAPRP_H */
