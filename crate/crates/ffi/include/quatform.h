#ifndef QUATFORM_H
#define QUATFORM_H

/* Generated by cbindgen from the quatform-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>
#include <stdint.h>
#include <stdbool.h>
#include <stddef.h>

// Status codes returned by every entry point.
typedef enum {
  QF_STATUS_OK = 0,
  // Invalid argument or unsupported form.
  QF_STATUS_ERR_ARGUMENT = 2,
  // A proof-range hypothesis (such as p >= 101) was not met.
  QF_STATUS_ERR_HYPOTHESIS = 3,
  // A checked inequality failed.
  QF_STATUS_ERR_VERIFICATION = 4,
  // Work refused: it would exceed an internal budget.
  QF_STATUS_ERR_RESOURCE = 5,
  // A required pointer was null.
  QF_STATUS_ERR_NULL = 6,
  // A result did not fit the requested C type.
  QF_STATUS_ERR_OVERFLOW = 7,
} QfStatus;

// Opaque handle to a validated quaternary form.
typedef struct QfForm QfForm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent error on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *qf_last_error_message(void);

// Builds a form from 16 row-major Gram entries.
//
// # Safety
// `gram` must point to 16 readable i64 values and `out` must be a valid
// location for a pointer. On success `*out` owns the form; release it
// with [`qf_form_free`].
QfStatus qf_form_from_gram(const int64_t *gram, QfForm **out);

// Builds the family form of prime discriminant p (p = 5 mod 8).
//
// # Safety
// `out` must be a valid location for a pointer; see [`qf_form_from_gram`].
QfStatus qf_form_family(uint64_t p, QfForm **out);

// Releases a form handle. Null is tolerated.
//
// # Safety
// `form` must be null or a pointer produced by this library that has not
// been freed already.
void qf_form_free(QfForm *form);

// Discriminant det(A).
//
// # Safety
// `form` must be a live handle and `out` writable.
QfStatus qf_form_disc(const QfForm *form, int64_t *out);

// Level N(Q).
//
// # Safety
// `form` must be a live handle and `out` writable.
QfStatus qf_form_level(const QfForm *form, int64_t *out);

// Dual form with Gram N(Q) A^{-1}.
//
// # Safety
// `form` must be a live handle; `out` receives an owned handle.
QfStatus qf_form_dual(const QfForm *form, QfForm **out);

// Smallest positive represented integer.
//
// # Safety
// `form` must be a live handle and `out` writable.
QfStatus qf_min_nonzero(const QfForm *form, uint64_t *out);

// Outer coefficient a_1 of the reduced decomposition (equals the minimum)
// as a rational num/den pair.
//
// # Safety
// `form` must be a live handle; `num` and `den` writable.
QfStatus qf_reduced_a1(const QfForm *form, int64_t *num, uint64_t *den);

// Representation counts r(0..=n_max) into a caller buffer of n_max + 1
// entries.
//
// # Safety
// `form` must be a live handle; `out` must have space for n_max + 1 u64.
QfStatus qf_representation_counts(const QfForm *form, uint64_t n_max, uint64_t *out);

// Eisenstein coefficient a_E(n) as a double.
//
// # Safety
// `form` must be a live handle and `out` writable.
QfStatus qf_eisenstein_coeff(const QfForm *form, uint64_t n, double *out);

// Exact local density beta_q(n) as num/den.
//
// # Safety
// `form` must be a live handle; `num` and `den` writable.
QfStatus qf_local_density(const QfForm *form, uint64_t q, uint64_t n, uint64_t *num, uint64_t *den);

// Petersson norm bound 1/min Q* + 3216.66 M(25.09 p^(35/6))/p^(1/4).
// `force` waives the p >= 101 hypothesis.
//
// # Safety
// `form` must be a live handle and `out` writable.
QfStatus qf_petersson_norm_bound(const QfForm *form, bool force, double *out);

// Verifies the family classification for p up to n_max. `matches` gets the
// verdict; up to `cap` computed exceptions are copied into `exceptions`
// with the true count in `n_exceptions`.
//
// # Safety
// `matches` and `n_exceptions` must be writable; `exceptions` must hold
// `cap` entries (it may be null when cap = 0).
QfStatus qf_family_verify(uint64_t p,
                          uint64_t n_max,
                          bool *matches,
                          uint64_t *exceptions,
                          uintptr_t cap,
                          uintptr_t *n_exceptions);

// Record divisor count M(limit) and its smallest witness.
//
// # Safety
// `m` and `witness` must be writable.
QfStatus qf_max_tau(uint64_t limit, uint64_t *m, uint64_t *witness);

// psi kernel lattice sum at x with truncation tolerance tol.
//
// # Safety
// `out` must be writable.
QfStatus qf_psi_sum(double x, double tol, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* QUATFORM_H */
