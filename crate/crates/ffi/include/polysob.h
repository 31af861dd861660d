#ifndef POLYSOB_H
#define POLYSOB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PolysobStatus {
  POLYSOB_STATUS_OK = 0,
  // `(n, k)` violates `2 <= 2k < n`.
  POLYSOB_STATUS_INVALID_DIMENSION = 1,
  POLYSOB_STATUS_INVALID_ARGUMENT = 2,
  POLYSOB_STATUS_NULL_POINTER = 3,
  // Quadrature failure, divergence or a value with no exact form.
  POLYSOB_STATUS_NUMERICAL = 4,
  POLYSOB_STATUS_PANIC = 5,
} PolysobStatus;

// Fundamental solution of `Δ^k + α^{2k}` on `ℝⁿ`.
typedef struct PolysobKernel PolysobKernel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static, NUL-terminated description of a status code.
const char *polysob_status_message(enum PolysobStatus status);

// Critical exponent `2n/(n-2k)`.
//
// # Safety
// `out` must be valid for a write of one `double`.
enum PolysobStatus polysob_critical_exponent(int n, int k, double *out);

// Sharp Euclidean Sobolev constant `K(n,k)`.
//
// # Safety
// `out` must be valid for a write of one `double`.
enum PolysobStatus polysob_sharp_constant(int n, int k, double *out);

// Coefficient of `r^{2k-n}` in the fundamental solution at the origin.
//
// # Safety
// `out` must be valid for a write of one `double`.
enum PolysobStatus polysob_singular_constant(int n, int k, double *out);

// Test-function quotient `Q(ε)` on the unit sphere (`sphere != 0`) or the
// `2π`-periodic torus, with mass coefficient `b`. Writes `Q` and its error
// estimate.
//
// # Safety
// `q` and `err` must be valid for a write of one `double` each.
enum PolysobStatus polysob_quotient(int sphere,
                                    int n,
                                    int k,
                                    double b,
                                    double eps,
                                    double *q,
                                    double *err);

// Build a kernel evaluated with `precision` decimal digits near the origin
// (0 selects the default).
//
// # Safety
// `out` must be valid for a write of one pointer. On success the handle must
// be released with [`polysob_kernel_free`].
enum PolysobStatus polysob_kernel_new(int n, int k, uint32_t precision, struct PolysobKernel **out);

// `Γ_α(r) = α^{n-2k} Γ(αr)`.
//
// # Safety
// `kernel` must come from [`polysob_kernel_new`] and not have been freed;
// `out` must be valid for a write of one `double`.
enum PolysobStatus polysob_kernel_eval(const struct PolysobKernel *kernel,
                                       double alpha,
                                       double r,
                                       double *out);

// Sum of the moduli of the Bessel terms at `r`, an upper bound for `|Γ(r)|`.
//
// # Safety
// Same as [`polysob_kernel_eval`].
enum PolysobStatus polysob_kernel_envelope(const struct PolysobKernel *kernel,
                                           double r,
                                           double *out);

// Release a kernel; null is ignored.
//
// # Safety
// `kernel` must be null or come from [`polysob_kernel_new`], and must not be
// used afterwards.
void polysob_kernel_free(struct PolysobKernel *kernel);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYSOB_H */
