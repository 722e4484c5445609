#ifndef BACKSTEP_H
#define BACKSTEP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BsStatus {
  BS_STATUS_OK = 0,
  BS_STATUS_NULL_POINTER = 1,
  BS_STATUS_INVALID_ARGUMENT = 2,
  BS_STATUS_CONTROLLABILITY = 3,
  BS_STATUS_UNSTABLE = 4,
  BS_STATUS_NUMERICAL = 5,
  BS_STATUS_PANIC = 6,
} BsStatus;

/**
 * Feedback law together with the controller coefficients it was built from.
 */
typedef struct BsLaw BsLaw;

typedef struct BsTransform BsTransform;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty if none). The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *bs_last_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *bs_version(void);

/**
 * Law for the ramp `φ(x) = L − x` with `m = 1`, coefficients `|n| ≤ order`.
 *
 * # Safety
 * `out` must be null or a valid pointer to a `BsLaw*`.
 */
enum BsStatus bs_law_ramp(double period, double lambda, size_t order, struct BsLaw **out);

/**
 * Law from a piecewise polynomial controller. `breakpoints` holds `pieces + 1`
 * increasing values from 0 to `period`; piece `j` has `piece_len[j]`
 * coefficients (increasing degree), stored consecutively in `coeffs`.
 *
 * # Safety
 * `breakpoints` must hold `pieces + 1` doubles, `piece_len` `pieces` entries
 * and `coeffs` their sum; `out` must be a valid pointer to a `BsLaw*`.
 */
enum BsStatus bs_law_piecewise(double period,
                               const double *breakpoints,
                               const size_t *piece_len,
                               size_t pieces,
                               const double *coeffs,
                               uint32_t m,
                               double lambda,
                               size_t order,
                               struct BsLaw **out);

/**
 * Law from raw two-sided controller coefficients `φ_{−N..=N}`.
 *
 * # Safety
 * `re`, `im` must hold `2 * order + 1` doubles; `out` must be a valid pointer.
 */
enum BsStatus bs_law_from_coeffs(double period,
                                 const double *re,
                                 const double *im,
                                 size_t order,
                                 uint32_t m,
                                 double lambda,
                                 struct BsLaw **out);

/**
 * # Safety
 * `law` must come from a `bs_law_*` constructor and not be freed yet.
 */
void bs_law_free(struct BsLaw *law);

/**
 * # Safety
 * `law` must be a live handle; `out` a valid pointer.
 */
enum BsStatus bs_law_gain(const struct BsLaw *law, double *out);

/**
 * # Safety
 * `law` must be a live handle; `out` a valid pointer.
 */
enum BsStatus bs_law_bandwidth(const struct BsLaw *law, size_t *out);

/**
 * Copies `F_{−N..=N}`; `len` must equal `2N + 1`.
 *
 * # Safety
 * `law` must be a live handle; `re`, `im` must hold `len` writable doubles.
 */
enum BsStatus bs_law_coeffs(const struct BsLaw *law, double *re, double *im, size_t len);

/**
 * `u = ⟨α, F⟩` for a state with coefficients `|n| ≤ order`.
 *
 * # Safety
 * `law` must be a live handle; `re`, `im` must hold `2 * order + 1`
 * doubles; `out_re`, `out_im` must be valid pointers.
 */
enum BsStatus bs_law_eval(const struct BsLaw *law,
                          const double *re,
                          const double *im,
                          size_t order,
                          double *out_re,
                          double *out_im);

/**
 * Transform on the law's full bandwidth; states may use `bandwidth / margin` modes.
 *
 * # Safety
 * `law` must be a live handle; `out` a valid pointer to a `BsTransform*`.
 */
enum BsStatus bs_transform_new(const struct BsLaw *law, size_t margin, struct BsTransform **out);

/**
 * # Safety
 * `t` must come from [`bs_transform_new`] and not be freed yet.
 */
void bs_transform_free(struct BsTransform *t);

/**
 * `z = Tα`; the output has `2 N_work + 1` entries.
 *
 * # Safety
 * `t` must be a live handle; inputs hold `2 * order + 1` doubles, outputs `out_len`.
 */
enum BsStatus bs_transform_apply(const struct BsTransform *t,
                                 const double *re,
                                 const double *im,
                                 size_t order,
                                 double *out_re,
                                 double *out_im,
                                 size_t out_len);

/**
 * `α = T⁻¹z` for `order ≤ N_work / margin`; the output has `2 N_work + 1` entries.
 *
 * # Safety
 * As [`bs_transform_apply`].
 */
enum BsStatus bs_transform_apply_inverse(const struct BsTransform *t,
                                         const double *re,
                                         const double *im,
                                         size_t order,
                                         double *out_re,
                                         double *out_im,
                                         size_t out_len);

/**
 * Closed-loop state at time `time` by conjugation with the target flow,
 * truncated to `out_order`; `norm` (may be null) receives `‖α(t)‖_m`.
 *
 * # Safety
 * `t` must be a live handle; inputs hold `2 * order + 1` doubles and the
 * outputs `2 * out_order + 1`.
 */
enum BsStatus bs_closed_loop_state(const struct BsTransform *t,
                                   const double *re,
                                   const double *im,
                                   size_t order,
                                   double mu,
                                   double time,
                                   double *out_re,
                                   double *out_im,
                                   size_t out_order,
                                   double *norm);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BACKSTEP_H */
