#ifndef INTERLEAVE_H
#define INTERLEAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IlStatus {
  IL_STATUS_OK = 0,
  IL_STATUS_NULL_POINTER = 1,
  IL_STATUS_INVALID_PARAMETER = 2,
  IL_STATUS_DEGENERATE_SPECTRUM = 3,
  IL_STATUS_SINGULAR_CONDITIONING = 4,
  IL_STATUS_TRAINING_FAILURE = 5,
  IL_STATUS_MODEL_FORMAT = 6,
  IL_STATUS_IO = 7,
  IL_STATUS_PANIC = 8,
  IL_STATUS_OTHER = 9,
} IlStatus;

typedef enum IlScheme {
  IL_SCHEME_BASIC_ANTENNA = 0,
  /**
   * Basic beam-domain training with the DFT codebook.
   */
  IL_SCHEME_BASIC_BEAM = 1,
  IL_SCHEME_MODIFIED_BEAM = 2,
  IL_SCHEME_MODIFIED_ANTENNA = 3,
} IlScheme;

/**
 * Opaque channel covariance.
 */
typedef struct IlCovariance IlCovariance;

/**
 * Opaque fitted regressor.
 */
typedef struct IlRegressor IlRegressor;

/**
 * Monte Carlo summary.
 */
typedef struct IlEstimate {
  double mean_length;
  double std_error;
  double outage_rate;
  size_t trials;
} IlEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *il_last_error_message(void);

/**
 * Exponential correlation `[R]_{ij} = rho^{j-i}` for `j >= i`.
 *
 * # Safety
 * `out_handle` must be a valid pointer to writable storage for one handle.
 */
enum IlStatus il_covariance_exponential(size_t antennas,
                                        double rho_re,
                                        double rho_im,
                                        struct IlCovariance **out_handle);

/**
 * One-ring covariance for a uniform linear array. Angles in degrees.
 *
 * # Safety
 * `out_handle` must be a valid pointer to writable storage for one handle.
 */
enum IlStatus il_covariance_one_ring(size_t antennas,
                                     double spacing,
                                     double theta_bar_deg,
                                     double angular_spread_deg,
                                     size_t nodes,
                                     struct IlCovariance **out_handle);

/**
 * Number of antennas, or 0 for NULL.
 *
 * # Safety
 * `cov` must be NULL or a live handle.
 */
size_t il_covariance_dim(const struct IlCovariance *cov);

/**
 * # Safety
 * `cov` must be NULL or a handle not yet freed.
 */
void il_covariance_free(struct IlCovariance *cov);

/**
 * Closed-form average training length of basic antenna-domain training.
 *
 * # Safety
 * `cov` must be a live handle and `out_value` writable.
 */
enum IlStatus il_lt_antenna_basic(const struct IlCovariance *cov,
                                  double alpha_th,
                                  double *out_value);

/**
 * Closed-form average training length of basic beam-domain training with the DFT codebook.
 *
 * # Safety
 * `cov` must be a live handle and `out_value` writable.
 */
enum IlStatus il_lt_beam_dft(const struct IlCovariance *cov, double alpha_th, double *out_value);

/**
 * Closed-form average training length of modified beam-domain training.
 *
 * # Safety
 * `cov` must be a live handle and `out_value` writable.
 */
enum IlStatus il_lt_beam_modified(const struct IlCovariance *cov,
                                  double alpha_th,
                                  double *out_value);

/**
 * # Safety
 * `out_value` must be writable.
 */
enum IlStatus il_lt_iid(size_t antennas, double alpha_th, double *out_value);

/**
 * # Safety
 * `out_value` must be writable.
 */
enum IlStatus il_lt_fully_correlated(size_t antennas, double alpha_th, double *out_value);

/**
 * Monte Carlo estimate; results depend only on the inputs and `seed`.
 *
 * # Safety
 * `cov` must be a live handle and `out_estimate` writable.
 */
enum IlStatus il_monte_carlo(const struct IlCovariance *cov,
                             enum IlScheme scheme,
                             double alpha_th,
                             size_t trials,
                             uint64_t seed,
                             struct IlEstimate *out_estimate);

/**
 * First-order Marcum Q function; NaN if either argument is NaN.
 */
double il_marcum_q1(double a, double b);

/**
 * CDF at `x` of `sum_t values[t] * Exp-sum of multiplicities[t] unit exponentials`.
 *
 * # Safety
 * `values` and `multiplicities` must point to `len` readable elements; `out_value` must be writable.
 */
enum IlStatus il_wcs_cdf(const double *values,
                         const size_t *multiplicities,
                         size_t len,
                         double x,
                         double *out_value);

/**
 * Load a regressor written by `fit-surrogate`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_handle` writable.
 */
enum IlStatus il_regressor_load(const char *path, struct IlRegressor **out_handle);

/**
 * Predicted training length; `out_in_domain` (may be NULL) reports whether
 * the inputs lie inside the training domain.
 *
 * # Safety
 * `model` must be a live handle, `out_value` writable, `out_in_domain` NULL or writable.
 */
enum IlStatus il_regressor_predict(const struct IlRegressor *model,
                                   double rho,
                                   double alpha_th,
                                   double *out_value,
                                   bool *out_in_domain);

/**
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void il_regressor_free(struct IlRegressor *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTERLEAVE_H */
