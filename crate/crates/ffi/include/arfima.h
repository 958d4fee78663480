#ifndef ARFIMA_H
#define ARFIMA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Innovation distribution for [`arfima_simulate`].
 */
typedef enum ArfimaInnovation {
  ARFIMA_INNOVATION_GAUSSIAN = 0,
  ARFIMA_INNOVATION_UNIFORM = 1,
} ArfimaInnovation;

/**
 * Point predictor for [`arfima_predict`].
 */
typedef enum ArfimaPredictor {
  ARFIMA_PREDICTOR_CSS_RECURSIVE = 0,
  ARFIMA_PREDICTOR_CSS_CLOSED_FORM = 1,
} ArfimaPredictor;

typedef enum ArfimaStatus {
  ARFIMA_STATUS_OK = 0,
  ARFIMA_STATUS_NULL_POINTER = 1,
  ARFIMA_STATUS_INVALID_PARAMETER = 2,
  ARFIMA_STATUS_INFEASIBLE = 3,
  ARFIMA_STATUS_DIMENSION_MISMATCH = 4,
  ARFIMA_STATUS_DEGENERATE_DATA = 5,
  ARFIMA_STATUS_INSUFFICIENT_DATA = 6,
  ARFIMA_STATUS_NO_FEASIBLE_START = 7,
  ARFIMA_STATUS_DOMAIN = 8,
  ARFIMA_STATUS_INTERNAL = 9,
} ArfimaStatus;

/**
 * Opaque CSS fit result.
 */
typedef struct ArfimaFit ArfimaFit;

/**
 * Opaque ARFIMA(p1, d, p2) parameter set.
 */
typedef struct ArfimaModel ArfimaModel;

typedef struct ArfimaCssOptions {
  double d_lo;
  double d_hi;
  uintptr_t starts_d;
  uintptr_t max_iter;
  double grad_tol;
} ArfimaCssOptions;

typedef struct ArfimaFitSummary {
  uintptr_t p1;
  uintptr_t p2;
  double d;
  double sigma2;
  double objective;
  bool converged;
  bool boundary;
  uintptr_t iterations;
} ArfimaFitSummary;

typedef struct ArfimaMspe {
  uintptr_t h;
  double sigma2_h;
  double f;
  double g;
  double j;
  double total_second_order;
  bool truncation_warning;
} ArfimaMspe;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len - 1` bytes. Returns the full
 * message length in bytes (without the terminator).
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t arfima_last_error_message(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *arfima_version(void);

/**
 * Creates a model from AR coefficients `alpha[0..p1]`, MA coefficients
 * `beta[0..p2]` and memory parameter `d`, after checking the model
 * constraints.
 *
 * # Safety
 * `alpha`/`beta` must point to `p1`/`p2` readable doubles (may be null when
 * the count is 0); `out` must be a valid pointer.
 */
enum ArfimaStatus arfima_model_new(const double *alpha,
                                   uintptr_t p1,
                                   const double *beta,
                                   uintptr_t p2,
                                   double d,
                                   struct ArfimaModel **out);

/**
 * # Safety
 * `model` must be null or a handle from this library not yet freed.
 */
void arfima_model_free(struct ArfimaModel *model);

/**
 * Writes the model's orders and memory parameter. Any pointer may be null.
 *
 * # Safety
 * `model` must be a live handle; non-null outputs must be writable.
 */
enum ArfimaStatus arfima_model_orders(const struct ArfimaModel *model,
                                      uintptr_t *p1,
                                      uintptr_t *p2,
                                      double *d);

/**
 * Copies the AR and MA coefficients into `alpha[0..p1]` and `beta[0..p2]`.
 *
 * # Safety
 * `model` must be a live handle; outputs must hold `p1`/`p2` doubles.
 */
enum ArfimaStatus arfima_model_coefficients(const struct ArfimaModel *model,
                                            double *alpha,
                                            double *beta);

/**
 * Simulates `n` observations with zero initial conditions. `eps_out` may be
 * null; otherwise it receives the innovations.
 *
 * # Safety
 * `model` must be a live handle; `y_out` (and `eps_out` if non-null) must
 * hold `n` doubles.
 */
enum ArfimaStatus arfima_simulate(const struct ArfimaModel *model,
                                  double sigma,
                                  uintptr_t n,
                                  uint64_t seed,
                                  enum ArfimaInnovation innovation,
                                  double *y_out,
                                  double *eps_out);

/**
 * Residuals of `y[0..n]` under the model, written to `out[0..n]`.
 *
 * # Safety
 * `model` must be a live handle; `y` and `out` must hold `n` doubles.
 */
enum ArfimaStatus arfima_residuals(const struct ArfimaModel *model,
                                   const double *y,
                                   uintptr_t n,
                                   double *out);

/**
 * Sum of squared residuals of `y[0..n]` under the model.
 *
 * # Safety
 * `model` must be a live handle; `y` must hold `n` doubles; `out` writable.
 */
enum ArfimaStatus arfima_css_objective(const struct ArfimaModel *model,
                                       const double *y,
                                       uintptr_t n,
                                       double *out);

/**
 * Default CSS options: d in [-1, 3] and the library's optimizer defaults.
 */
struct ArfimaCssOptions arfima_css_options_default(void);

/**
 * Fits an ARFIMA(p1, d, p2) model to `y[0..n]` by conditional sum of
 * squares. `options` may be null for defaults.
 *
 * # Safety
 * `y` must hold `n` doubles; `options` null or valid; `out` writable.
 */
enum ArfimaStatus arfima_estimate_css(const double *y,
                                      uintptr_t n,
                                      uintptr_t p1,
                                      uintptr_t p2,
                                      const struct ArfimaCssOptions *options,
                                      struct ArfimaFit **out);

/**
 * # Safety
 * `fit` must be null or a handle from this library not yet freed.
 */
void arfima_fit_free(struct ArfimaFit *fit);

/**
 * # Safety
 * `fit` must be a live handle; `out` writable.
 */
enum ArfimaStatus arfima_fit_summary(const struct ArfimaFit *fit, struct ArfimaFitSummary *out);

/**
 * Returns the fitted parameters as a new model handle owned by the caller.
 *
 * # Safety
 * `fit` must be a live handle; `out` writable.
 */
enum ArfimaStatus arfima_fit_model(const struct ArfimaFit *fit, struct ArfimaModel **out);

/**
 * Predicts `y_{n+1}..y_{n+h}` from `y[0..n]` with the model's coefficients.
 *
 * # Safety
 * `model` must be a live handle; `y` holds `n` doubles, `out` holds `h`.
 */
enum ArfimaStatus arfima_predict(const struct ArfimaModel *model,
                                 const double *y,
                                 uintptr_t n,
                                 uintptr_t h,
                                 enum ArfimaPredictor method,
                                 double *out);

/**
 * Least-squares integrated AR(p1) forecasts of `y_{n+1}..y_{n+h}`.
 *
 * # Safety
 * `y` holds `n` doubles, `out` holds `h`.
 */
enum ArfimaStatus arfima_predict_ls(const double *y,
                                    uintptr_t n,
                                    uintptr_t p1,
                                    uintptr_t h,
                                    double *out);

/**
 * Second-order MSPE decomposition at horizon `h` for the true model.
 * `truncation` 0 selects the library default.
 *
 * # Safety
 * `model` must be a live handle; `out` writable.
 */
enum ArfimaStatus arfima_mspe_decomposition(const struct ArfimaModel *model,
                                            double sigma2,
                                            uintptr_t h,
                                            uintptr_t truncation,
                                            struct ArfimaMspe *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARFIMA_H */
