#ifndef EXSIS_H
#define EXSIS_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum ExsisStatus {
  EXSIS_STATUS_OK = 0,
  EXSIS_STATUS_NULL_POINTER = 1,
  EXSIS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed or degenerate data, e.g. a zero column.
   */
  EXSIS_STATUS_DATA = 3,
  /**
   * The requested bound's preconditions do not hold.
   */
  EXSIS_STATUS_INFEASIBLE = 4,
  EXSIS_STATUS_IO = 5,
  EXSIS_STATUS_PANIC = 6,
} ExsisStatus;

/**
 * Opaque design matrix with unit-norm columns.
 */
typedef struct ExsisDesign ExsisDesign;

/**
 * Coherence summary of a design.
 */
typedef struct ExsisCoherence {
  double mu;
  double nu;
  double welch;
  size_t argmax_i;
  size_t argmax_j;
} ExsisCoherence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next exsis call on the same thread.
 */
const char *exsis_last_error_message(void);

/**
 * Builds a design from `n * p` values and normalizes every column.
 * `row_major` selects the layout of `data`.
 */
enum ExsisStatus exsis_design_from_raw(const double *data,
                                       size_t n,
                                       size_t p,
                                       bool row_major,
                                       struct ExsisDesign **out);

/**
 * Loads a design from CSV or the binary matrix format, re-normalizing
 * columns that are not unit norm.
 */
enum ExsisStatus exsis_design_load(const char *path, struct ExsisDesign **out);

/**
 * Releases a design. Null is a no-op.
 */
void exsis_design_free(struct ExsisDesign *handle);

enum ExsisStatus exsis_design_dims(const struct ExsisDesign *handle, size_t *n, size_t *p);

/**
 * `w = Xᵀy` into `w` of length `p`.
 */
enum ExsisStatus exsis_marginal_correlations(const struct ExsisDesign *handle,
                                             const double *y,
                                             size_t y_len,
                                             double *w,
                                             size_t w_len);

enum ExsisStatus exsis_coherence_report(const struct ExsisDesign *handle,
                                        struct ExsisCoherence *out);

/**
 * Writes the `d` indices with the largest `|w_i|` in ascending order.
 * `threshold` may be null.
 */
enum ExsisStatus exsis_screen_top_d(const double *w,
                                    size_t p,
                                    size_t d,
                                    size_t *selected,
                                    double *threshold);

enum ExsisStatus exsis_minimum_model_size(const double *w,
                                          size_t p,
                                          const size_t *support,
                                          size_t k,
                                          size_t *out);

/**
 * `√((p − n) / (n(p − 1)))`, zero when `p ≤ n`.
 */
double exsis_welch_bound(size_t n, size_t p);

/**
 * `⌈n / ln p⌉`.
 */
enum ExsisStatus exsis_d_n_over_logp(size_t n, size_t p, size_t *out);

size_t exsis_d_sqrt_n(size_t n);

/**
 * General-route screened size for a given `b`. Returns
 * `EXSIS_STATUS_INFEASIBLE` with the failed preconditions in the error
 * message when no size is certified.
 */
enum ExsisStatus exsis_d_general(size_t n,
                                 size_t p,
                                 size_t k,
                                 double beta_min,
                                 double beta_l2,
                                 double sigma,
                                 double b,
                                 size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXSIS_H */
