#ifndef ENSELECT_H
#define ENSELECT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every call.
 */
typedef enum EnselectStatus {
  ENSELECT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  ENSELECT_STATUS_NULL_POINTER = 1,
  /**
   * An argument is outside the domain of the operation.
   */
  ENSELECT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Divergence, no finite root, or a lasso that did not converge.
   */
  ENSELECT_STATUS_NUMERICAL = 3,
  /**
   * An internal panic was caught.
   */
  ENSELECT_STATUS_PANIC = 4,
  /**
   * A caller-provided buffer is too small.
   */
  ENSELECT_STATUS_BUFFER_TOO_SMALL = 5,
} EnselectStatus;

typedef enum EnselectEstimator {
  ENSELECT_ESTIMATOR_SS = 0,
  ENSELECT_ESTIMATOR_DKO = 1,
  ENSELECT_ESTIMATOR_LASSO = 2,
} EnselectEstimator;

typedef enum EnselectStatistic {
  ENSELECT_STATISTIC_Q = 0,
  ENSELECT_STATISTIC_M = 1,
  ENSELECT_STATISTIC_V = 2,
  ENSELECT_STATISTIC_V_KNOCK = 3,
  ENSELECT_STATISTIC_TPR = 4,
  ENSELECT_STATISTIC_FDR = 5,
  ENSELECT_STATISTIC_KNOCKOFF_MEAN = 6,
} EnselectStatistic;

/**
 * Solution of the derandomized-knockoff system.
 */
typedef struct EnselectDkoSolution EnselectDkoSolution;

/**
 * Simulation statistics at one λ.
 */
typedef struct EnselectEmpirical EnselectEmpirical;

/**
 * Solution of the stability-selection or plain-lasso system.
 */
typedef struct EnselectSsSolution EnselectSsSolution;

/**
 * Model parameters.
 */
typedef struct EnselectConfig {
  double alpha;
  double rho;
  double delta;
  double lambda;
  double mu_b;
} EnselectConfig;

/**
 * Fixed-point solver settings.
 */
typedef struct EnselectSolverSettings {
  double damping;
  double tol;
  size_t max_iter;
  double min_clip;
} EnselectSolverSettings;

typedef struct EnselectSsParams {
  double q;
  double m;
  double chi;
  double v;
  double q_hat;
  double m_hat;
  double chi_hat;
  double v_hat;
} EnselectSsParams;

typedef struct EnselectReport {
  double residual;
  size_t iterations;
  bool converged;
} EnselectReport;

typedef struct EnselectDkoParams {
  double q;
  double m;
  double chi;
  double v;
  double v_knock;
  double chi_knock;
  double q_hat;
  double q_hat_knock;
  double m_hat;
  double chi_hat;
  double v_hat;
  double v_hat_knock;
} EnselectDkoParams;

/**
 * Mean and standard error over data realizations.
 */
typedef struct EnselectStat {
  double mean;
  double se;
} EnselectStat;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *enselect_version(void);

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next call on this thread.
 */
const char *enselect_last_error_message(void);

/**
 * Fills `out` with the default model parameters.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum EnselectStatus enselect_config_default(struct EnselectConfig *out);

/**
 * Fills `out` with the default solver settings.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum EnselectStatus enselect_solver_settings_default(struct EnselectSolverSettings *out);

/**
 * Solves the stability-selection system. `settings` may be null for defaults.
 *
 * # Safety
 * Pointers must be null or valid; `*out` receives a handle to free with
 * [`enselect_ss_free`].
 */
enum EnselectStatus enselect_ss_solve(const struct EnselectConfig *config,
                                      const struct EnselectSolverSettings *settings,
                                      struct EnselectSsSolution **out);

/**
 * Solves the plain-lasso system; `mu_b` is ignored. Free with [`enselect_ss_free`].
 *
 * # Safety
 * As [`enselect_ss_solve`].
 */
enum EnselectStatus enselect_lasso_solve(const struct EnselectConfig *config,
                                         const struct EnselectSolverSettings *settings,
                                         struct EnselectSsSolution **out);

/**
 * # Safety
 * `sol` must be null or a handle from this library not yet freed.
 */
void enselect_ss_free(struct EnselectSsSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle; `out` valid for writes.
 */
enum EnselectStatus enselect_ss_params(const struct EnselectSsSolution *sol,
                                       struct EnselectSsParams *out);

/**
 * # Safety
 * `sol` must be a live handle; `out` valid for writes.
 */
enum EnselectStatus enselect_ss_report(const struct EnselectSsSolution *sol,
                                       struct EnselectReport *out);

/**
 * TPR and FDR of selecting at selection probability above `pi_th`.
 *
 * # Safety
 * `sol` must be a live handle; `tpr`, `fdr` valid for writes.
 */
enum EnselectStatus enselect_ss_tpr_fdr(const struct EnselectSsSolution *sol,
                                        double pi_th,
                                        double *tpr,
                                        double *fdr);

/**
 * # Safety
 * `sol` must be a live handle; `out` valid for writes.
 */
enum EnselectStatus enselect_ss_prediction_error(const struct EnselectSsSolution *sol, double *out);

/**
 * Solves the derandomized-knockoff system. `settings` may be null.
 *
 * # Safety
 * As [`enselect_ss_solve`]; free with [`enselect_dko_free`].
 */
enum EnselectStatus enselect_dko_solve(const struct EnselectConfig *config,
                                       const struct EnselectSolverSettings *settings,
                                       struct EnselectDkoSolution **out);

/**
 * # Safety
 * `sol` must be null or a handle from this library not yet freed.
 */
void enselect_dko_free(struct EnselectDkoSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle; `out` valid for writes.
 */
enum EnselectStatus enselect_dko_params(const struct EnselectDkoSolution *sol,
                                        struct EnselectDkoParams *out);

/**
 * # Safety
 * `sol` must be a live handle; `out` valid for writes.
 */
enum EnselectStatus enselect_dko_report(const struct EnselectDkoSolution *sol,
                                        struct EnselectReport *out);

/**
 * TPR and FDR of the derandomized filter at thresholds `z_th` and `pi_th`.
 *
 * # Safety
 * `sol` must be a live handle; `tpr`, `fdr` valid for writes.
 */
enum EnselectStatus enselect_dko_tpr_fdr(const struct EnselectDkoSolution *sol,
                                         double z_th,
                                         double pi_th,
                                         double *tpr,
                                         double *fdr);

/**
 * TPR and FDR of a single knockoff draw at threshold `z_th`.
 *
 * # Safety
 * `sol` must be a live handle; `tpr`, `fdr` valid for writes.
 */
enum EnselectStatus enselect_ko_tpr_fdr(const struct EnselectDkoSolution *sol,
                                        double z_th,
                                        double *tpr,
                                        double *fdr);

/**
 * # Safety
 * `sol` must be a live handle; `out` valid for writes.
 */
enum EnselectStatus enselect_dko_prediction_error(const struct EnselectDkoSolution *sol,
                                                  double *out);

/**
 * λ minimizing the asymptotic prediction error of `estimator`;
 * `config->lambda` is ignored. `settings` may be null.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum EnselectStatus enselect_optimal_lambda(enum EnselectEstimator estimator,
                                            const struct EnselectConfig *config,
                                            const struct EnselectSolverSettings *settings,
                                            double *lambda,
                                            double *prediction_error);

/**
 * Critical sample ratio of noiseless recovery. `mu_b > 0` selects stability
 * selection with that resampling rate; `mu_b == 0` selects derandomized knockoffs.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum EnselectStatus enselect_critical_alpha(double mu_b, double rho, double rel_tol, double *out);

/**
 * Positive root V of the noiseless V equation; `Numerical` when none exists.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum EnselectStatus enselect_solve_v(double alpha_eff, double rho_eff, double *out);

/**
 * Monte Carlo estimate of the statistics at `config->lambda`.
 *
 * # Safety
 * Pointers must be null or valid; free `*out` with [`enselect_empirical_free`].
 */
enum EnselectStatus enselect_simulate(enum EnselectEstimator estimator,
                                      const struct EnselectConfig *config,
                                      size_t n,
                                      size_t repeats,
                                      size_t realizations,
                                      double z_th,
                                      double pi_th,
                                      uint64_t seed,
                                      struct EnselectEmpirical **out);

/**
 * # Safety
 * `result` must be null or a handle from this library not yet freed.
 */
void enselect_empirical_free(struct EnselectEmpirical *result);

/**
 * One statistic of a simulation; `InvalidArgument` for knockoff-only
 * statistics of other estimators.
 *
 * # Safety
 * `result` must be a live handle; `out` valid for writes.
 */
enum EnselectStatus enselect_empirical_stat(const struct EnselectEmpirical *result,
                                            enum EnselectStatistic statistic,
                                            struct EnselectStat *out);

/**
 * Serializes the result as JSON into `buf` (NUL-terminated). `*needed`
 * receives the required size including the terminator; if `len` is smaller
 * the call returns `BufferTooSmall` and writes nothing. `buf` may be null
 * when `len` is 0.
 *
 * # Safety
 * `buf` must be valid for `len` bytes; other pointers as usual.
 */
enum EnselectStatus enselect_empirical_json(const struct EnselectEmpirical *result,
                                            char *buf,
                                            size_t len,
                                            size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENSELECT_H */
