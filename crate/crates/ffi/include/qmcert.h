#ifndef QMCERT_H
#define QMCERT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QmReduction {
  QM_REDUCTION_EXACT = 0,
  QM_REDUCTION_IDEAL_PAIRS = 1,
} QmReduction;

typedef enum QmStatus {
  QM_STATUS_OK = 0,
  QM_STATUS_NULL_POINTER = 1,
  QM_STATUS_INVALID_UTF8 = 2,
  QM_STATUS_INVALID_INPUT = 3,
  QM_STATUS_PARSE = 4,
  QM_STATUS_DIMENSION_MISMATCH = 5,
  QM_STATUS_NOT_ARCHIMEDEAN = 6,
  QM_STATUS_NUMERICAL = 7,
  QM_STATUS_PANIC = 8,
} QmStatus;

typedef enum QmNormMode {
  QM_NORM_MODE_AUTO = 0,
  QM_NORM_MODE_SQUARE = 1,
  QM_NORM_MODE_HERMITIAN = 2,
} QmNormMode;

/**
 * A quadratic module.
 */
typedef struct QmModule QmModule;

/**
 * A polynomial in the variables of the module it was parsed against.
 */
typedef struct QmPoly QmPoly;

typedef struct QmSolverOptions {
  double tol;
  uintptr_t max_iter;
  enum QmReduction reduction;
  bool allow_non_archimedean;
} QmSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Free with
 * `qm_string_free`.
 */
char *qm_last_error(void);

/**
 * # Safety
 * `s` must come from this library and must not have been freed.
 */
void qm_string_free(char *s);

/**
 * Library version as a static string; do not free.
 */
const char *qm_version(void);

struct QmSolverOptions qm_solver_options_default(void);

/**
 * # Safety
 * `name` must be a NUL-terminated string and `out` writable.
 */
enum QmStatus qm_module_preset(const char *name, struct QmModule **out);

/**
 * Builds a module from its JSON description.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum QmStatus qm_module_from_json(const char *json, struct QmModule **out);

/**
 * # Safety
 * `m` must be null or a handle from this library that was not freed.
 */
void qm_module_free(struct QmModule *m);

/**
 * Number of variables of the module.
 *
 * # Safety
 * `m` must be a live handle.
 */
uintptr_t qm_module_nvars(const struct QmModule *m);

/**
 * # Safety
 * `m` must be a live handle, `text` NUL-terminated, `out` writable.
 */
enum QmStatus qm_poly_parse(const struct QmModule *m, const char *text, struct QmPoly **out);

/**
 * Printed form of `p`, or null for a null handle. Free with
 * `qm_string_free`.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
char *qm_poly_to_string(const struct QmPoly *p);

/**
 * # Safety
 * `p` must be null or a handle from this library that was not freed.
 */
void qm_poly_free(struct QmPoly *p);

/**
 * Upper bound on the module norm of `a` from the degree-`d` truncation.
 * `opts` may be null for defaults.
 *
 * # Safety
 * Handles must be live; `opts` null or valid; `out` writable.
 */
enum QmStatus qm_norm_upper(const struct QmModule *m,
                            const struct QmPoly *a,
                            uintptr_t d,
                            enum QmNormMode mode,
                            const struct QmSolverOptions *opts,
                            double *out);

/**
 * Lower bound on the module norm of `a` over `n`-dimensional points.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum QmStatus qm_search_lower(const struct QmModule *m,
                              const struct QmPoly *a,
                              uintptr_t n,
                              uintptr_t restarts,
                              uint64_t seed,
                              double *out);

/**
 * Searches for a degree-`d` certificate of `a + eps`. `found` receives the
 * verdict; `json`, when not null, receives the full result record.
 *
 * # Safety
 * Handles must be live; `opts` null or valid; `found` writable; `json`
 * null or writable.
 */
enum QmStatus qm_member(const struct QmModule *m,
                        const struct QmPoly *a,
                        uintptr_t d,
                        double eps,
                        const struct QmSolverOptions *opts,
                        bool *found,
                        char **json);

/**
 * Norm of the Harper operator at `θ = 2πp/q`.
 *
 * # Safety
 * `out` must be writable.
 */
enum QmStatus qm_harper_norm(int64_t p, int64_t q, uintptr_t grid, double *out);

/**
 * # Safety
 * `out` must be writable; the string is freed with `qm_string_free`.
 */
enum QmStatus qm_butterfly_csv(int64_t q_max, uintptr_t grid, char **out);

/**
 * Unitary dilation of the `s × s` contraction given row-major as separate
 * real and imaginary arrays. The `2s × 2s` result is written the same way.
 *
 * # Safety
 * `t_re`, `t_im` must hold `s*s` values; `u_re`, `u_im` room for `4*s*s`.
 */
enum QmStatus qm_unitary_dilate(const double *t_re,
                                const double *t_im,
                                uintptr_t s,
                                double *u_re,
                                double *u_im);

/**
 * Executes a problem file (JSON text) and returns what the command line
 * would print for it.
 *
 * # Safety
 * `problem` must be NUL-terminated and `out` writable.
 */
enum QmStatus qm_run_problem(const char *problem, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMCERT_H */
