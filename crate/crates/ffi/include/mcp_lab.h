#ifndef MCP_LAB_H
#define MCP_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MCP_STATUS_OK = 0,
  MCP_STATUS_NULL_POINTER = 1,
  MCP_STATUS_DOMAIN = 2,
  MCP_STATUS_DIMENSION_MISMATCH = 3,
  MCP_STATUS_NO_FEASIBLE_CANDIDATE = 4,
  MCP_STATUS_NON_CONVERGENCE = 5,
  MCP_STATUS_SIZE_OVERFLOW = 6,
  MCP_STATUS_CONFIG = 7,
  MCP_STATUS_IO = 8,
  MCP_STATUS_BUFFER_TOO_SMALL = 9,
  MCP_STATUS_INTERNAL = 10,
} McpStatus;

/**
 * Decoded codebook entries within a budget, in canonical order.
 */
typedef struct McpCandidates McpCandidates;

/**
 * A seeded Gaussian sensing matrix.
 */
typedef struct McpEnsemble McpEnsemble;

typedef struct {
  double e1;
  double e2;
  double e3;
  double e4;
  double e5;
  double union_bound;
} McpEventBounds;

typedef struct {
  /**
   * Position of the winner in canonical order.
   */
  size_t index;
  uint32_t complexity_bits;
  double residual;
} McpRecovery;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL terminated, into
 * `buf`. Returns the message length in bytes without the terminator; the
 * copy is truncated when `len` is too small. `buf` may be null to query
 * the length.
 */
size_t mcp_last_error_message(char *buf, size_t len);

/**
 * `m`-bit truncation of `x` in `[0, 1]`.
 */
McpStatus mcp_truncate(double x, uint32_t m, double *result);

/**
 * Noiseless error threshold and the probability bound for exceeding it.
 */
McpStatus mcp_theorem1(double kappa_bits,
                       uint32_t m,
                       size_t n,
                       size_t d,
                       double tau,
                       double t,
                       double *threshold,
                       double *probability_bound);

/**
 * Squared-error level of the noisy recovery guarantee.
 */
McpStatus mcp_theorem2(double kappa_bits, double sigma, size_t d, double r, double *result);

/**
 * Event complement bounds at the standard parameters for `r`.
 */
McpStatus mcp_event_bounds(double r,
                           double sigma,
                           size_t d,
                           size_t n,
                           double kappa_bits,
                           McpEventBounds *result);

McpStatus mcp_ensemble_new(size_t d, size_t n, uint64_t seed, McpEnsemble **handle);

/**
 * Releases an ensemble. Null is ignored.
 *
 * # Safety
 * `handle` must come from [`mcp_ensemble_new`] and not be used afterwards.
 */
void mcp_ensemble_free(McpEnsemble *handle);

McpStatus mcp_ensemble_sigma_max(const McpEnsemble *handle, double *result);

/**
 * `y = A x` with `x_len == n` and `y_len == d`.
 */
McpStatus mcp_ensemble_measure(const McpEnsemble *handle,
                               const double *x,
                               size_t x_len,
                               double *y,
                               size_t y_len);

/**
 * `generators` is a comma-separated list such as `CONSTANT,K_SPARSE:1`.
 * `m = 0` selects the default resolution for `n`.
 */
McpStatus mcp_candidates_new(const char *generators,
                             size_t n,
                             uint32_t m,
                             uint32_t budget_bits,
                             McpCandidates **handle);

/**
 * Releases a candidate set. Null is ignored.
 *
 * # Safety
 * `handle` must come from [`mcp_candidates_new`] and not be used afterwards.
 */
void mcp_candidates_free(McpCandidates *handle);

McpStatus mcp_candidates_len(const McpCandidates *handle, size_t *result);

/**
 * Simplest candidate with `||y - A x|| <= delta`; `delta <= 0` selects
 * `1e-9 max(1, ||y||)`. Writes the winner's `n` grid codes to `codes`.
 */
McpStatus mcp_solve_noiseless(const McpEnsemble *ensemble_handle,
                              const McpCandidates *candidates_handle,
                              const double *y,
                              size_t y_len,
                              double delta,
                              McpRecovery *result,
                              uint64_t *codes,
                              size_t codes_len);

/**
 * Candidate with the smallest residual, earliest on ties.
 */
McpStatus mcp_solve_noisy(const McpEnsemble *ensemble_handle,
                          const McpCandidates *candidates_handle,
                          const double *y,
                          size_t y_len,
                          McpRecovery *result,
                          uint64_t *codes,
                          size_t codes_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCP_LAB_H */
