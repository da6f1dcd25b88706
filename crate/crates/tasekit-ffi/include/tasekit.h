#ifndef TASEKIT_H
#define TASEKIT_H

/* This file is generated from the tasekit-ffi Rust sources; edit those instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call in this ABI.
typedef enum TasekitStatus {
  // The call completed; outputs are valid.
  TasekitOk = 0,
  // A required pointer argument was null.
  TasekitNullArgument = 1,
  // The request was malformed: unknown name, bad order, bad sizes.
  TasekitInvalidConfig = 2,
  // Inputs left the mathematical domain of the operation.
  TasekitDomainError = 3,
  // A numerical breakdown inside the library (singular solve, panic).
  TasekitNumericalError = 4,
  // A string argument was not valid UTF-8.
  TasekitUtf8Error = 5,
  // The caller's output buffer does not match the problem dimension.
  TasekitBadLength = 6,
} TasekitStatus;

// Opaque benchmark-case handle; create with `tasekit_case_new`, release
// with `tasekit_case_free`.
typedef struct TasekitCase TasekitCase;

// Overrides for one integration run. Zero/negative/null fields mean
// "use the case default" so a zeroed struct runs the calibrated setup.
typedef struct TasekitRunOptions {
  // Scheme name (ERK1-4, SDIRK1-4, CN; RK aliases accepted), or null
  // for the case's recommended scheme.
  const char *scheme;
  // Stabilizing order p; 0 disables preconditioning, negative keeps
  // the case default.
  int32_t tase_p;
  // Free parameter; non-finite or <= 0 keeps the calibrated value.
  double alpha;
  // Step size; non-finite or <= 0 keeps the case default.
  double dt;
  // Step count; 0 derives it from the horizon and step size.
  uint64_t n_steps;
  // 0 = case default, 1 = one preconditioner on the combined operator,
  // 2 = one per split group.
  int32_t split;
  // Nonzero routes boundary sources through the preconditioner with
  // the operator (the correct treatment); zero adds them outside.
  uint8_t bc_correct;
} TasekitRunOptions;

// Scalar summary of a finished run.
typedef struct TasekitRunInfo {
  uint64_t steps_completed;
  // 1 when the state norm blew past the divergence threshold.
  uint8_t diverged;
  // Time actually reached (steps times step size).
  double final_time;
  // Weighted relative l2 error against the case reference, NaN when
  // the case has no closed-form solution.
  double l2_rel;
  // Relative max-norm error, NaN without a reference.
  double linf_rel;
} TasekitRunInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, as a NUL-terminated
// string. Never null; empty when nothing failed yet. The pointer is
// invalidated by the next failing tasekit call on the same thread.
const char *tasekit_last_error(void);

// Library version as a static NUL-terminated string.
const char *tasekit_version(void);

// Builds the named benchmark case. Returns null on failure (unknown name,
// invalid configuration); the reason is readable via
// `tasekit_last_error`.
//
// # Safety
// `name` must be a NUL-terminated C string valid for reads.
TasekitCase *tasekit_case_new(const char *name);

// Releases a case handle. Null is accepted and ignored.
//
// # Safety
// `handle` must be null or a pointer returned by `tasekit_case_new`
// that has not been freed already.
void tasekit_case_free(TasekitCase *handle);

// State-vector length of the case, i.e. the number of entries
// `tasekit_case_run` writes.
//
// # Safety
// `handle` must be a live handle from `tasekit_case_new`; `out` must
// be valid for writing one `size_t`.
TasekitStatus tasekit_case_dimension(const TasekitCase *handle, size_t *out);

// Integrates the case and writes the final state plus a scalar summary.
//
// `options` may be null for the fully calibrated default run. `state_out`
// must hold exactly the case dimension; on divergence the partial state
// is still written and `info_out.diverged` is set, which is a completed
// call, not an error.
//
// # Safety
// `handle` must be a live handle. `state_out` must be valid for writing
// `state_len` doubles. `options` and `info_out` must each be null or
// point to a properly initialized/writable struct of the right type.
TasekitStatus tasekit_case_run(const TasekitCase *handle,
                               const TasekitRunOptions *options,
                               double *state_out,
                               size_t state_len,
                               TasekitRunInfo *info_out);

// Smallest stable alpha for the scheme/order pair, from the calibrated
// real-axis table.
//
// # Safety
// `scheme` must be a NUL-terminated C string; `out` must be writable.
TasekitStatus tasekit_alpha_min(const char *scheme, uint32_t p, double *out);

// Like `tasekit_alpha_min` but built on the scheme's exact real-axis
// intercept, which certification-grade sweeps need; the table value can
// sit a hair below the true boundary.
//
// # Safety
// `scheme` must be a NUL-terminated C string; `out` must be writable.
TasekitStatus tasekit_certified_alpha_min(const char *scheme, uint32_t p, double *out);

// Peak of |sigma| along the imaginary axis for the preconditioned scheme
// (p = 0 scans the bare scheme), sampled at the origin plus `samples`
// log-spaced points up to `y_max`.
//
// # Safety
// `scheme` must be a NUL-terminated C string; `out` must be writable.
TasekitStatus tasekit_imag_axis_max(const char *scheme,
                                    uint32_t p,
                                    double alpha,
                                    double y_max,
                                    size_t samples,
                                    double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif // TASEKIT_H
