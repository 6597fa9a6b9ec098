#ifndef FRANK_COPULA_H
#define FRANK_COPULA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Estimators accepted by [`fc_estimate`].
typedef enum FcMethod {
  FC_METHOD_MLE_LOGLIK = 0,
  FC_METHOD_MLE = 1,
  FC_METHOD_MME1 = 2,
  FC_METHOD_MME2 = 3,
  FC_METHOD_BFPE = 4,
  FC_METHOD_BJPE = 5,
} FcMethod;

typedef enum FcStatistic {
  FC_STATISTIC_SN = 0,
  FC_STATISTIC_TN = 1,
} FcStatistic;

// Result of every fallible call.
typedef enum FcStatus {
  FC_STATUS_OK = 0,
  // A null pointer, a bad enum value or an invalid option.
  FC_STATUS_INVALID_ARGUMENT = 1,
  // An argument outside the mathematical domain.
  FC_STATUS_DOMAIN = 2,
  // Input data that cannot be analysed.
  FC_STATUS_DATA = 3,
  // A numerical routine failed.
  FC_STATUS_NUMERICAL = 4,
  // A critical value outside the table.
  FC_STATUS_OUT_OF_TABLE = 5,
  // The library panicked; this is a bug.
  FC_STATUS_PANIC = 6,
} FcStatus;

typedef enum FcTies {
  FC_TIES_MAX = 0,
  FC_TIES_AVERAGE = 1,
} FcTies;

// A bivariate sample and its pseudo-observations.
typedef struct FcSample FcSample;

// A critical-value table.
typedef struct FcTable FcTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *fc_version(void);

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next library call on the same thread.
const char *fc_last_error_message(void);

// Copula density `c(u, v | θ)`.
//
// # Safety
// `out` must be valid for a write of one `double`.
enum FcStatus fc_density(double u, double v, double theta_value, double *out);

// Copula distribution function `C(u, v | θ)`.
//
// # Safety
// `out` must be valid for a write of one `double`.
enum FcStatus fc_cdf(double u, double v, double theta_value, double *out);

// Kendall's tau and Spearman's rho of the Frank copula at θ.
//
// # Safety
// Both pointers must be valid for a write of one `double`.
enum FcStatus fc_rank_correlations(double theta_value, double *tau, double *rho);

// Kendall distribution function `K(t, θ)`.
//
// # Safety
// `out` must be valid for a write of one `double`.
enum FcStatus fc_kendall_distribution(double t, double theta_value, double *out);

// Draw `n` pairs from the Frank copula into `u` and `v`.
//
// # Safety
// `u` and `v` must each be valid for `n` writes of `double`.
enum FcStatus fc_draw(size_t n, double theta_value, uint64_t seed, double *u, double *v);

// Build a sample from two columns of length `n`; `ties` is an [`FcTies`].
//
// # Safety
// `x` and `y` must each point to `n` readable `double`s and `out` must be
// valid for a pointer write. Release the handle with [`fc_sample_free`].
enum FcStatus fc_sample_new(const double *x,
                            const double *y,
                            size_t n,
                            int32_t ties,
                            struct FcSample **out);

// Release a sample; null is ignored.
//
// # Safety
// `sample` must come from [`fc_sample_new`] and not be used afterwards.
void fc_sample_free(struct FcSample *sample);

// Number of observations in a sample, 0 for null.
//
// # Safety
// `sample` must be null or a live handle.
size_t fc_sample_len(const struct FcSample *sample);

// Estimate θ from the pseudo-observations of a sample with the
// [`FcMethod`] `method`. Bayes windows have
// half-width 25 with 2000 intervals, centred at the maximum likelihood
// estimate.
//
// # Safety
// `sample` must be a live handle and `out` valid for one `double` write.
enum FcStatus fc_estimate(const struct FcSample *sample, int32_t method, double *out);

// Maximum likelihood θ̂ with the statistics `Sₙ` and `Tₙ` at θ̂.
//
// # Safety
// `sample` must be a live handle; each output pointer must be valid for one
// `double` write.
enum FcStatus fc_gof_statistics(const struct FcSample *sample,
                                double *theta_hat,
                                double *sn,
                                double *tn);

// Nonparametric bootstrap p-values of `Sₙ` and `Tₙ` from `b` resamples.
//
// # Safety
// `sample` must be a live handle; both output pointers must be valid for one
// `double` write.
enum FcStatus fc_bootstrap(const struct FcSample *sample,
                           size_t b,
                           uint64_t seed,
                           double *p_sn,
                           double *p_tn);

// Simulated critical values of `Sₙ` and `Tₙ` at one level.
//
// # Safety
// Both output pointers must be valid for one `double` write.
enum FcStatus fc_simulate_critical_values(size_t n,
                                          double theta_value,
                                          double level,
                                          size_t reps,
                                          uint64_t seed,
                                          double *sn,
                                          double *tn);

// The critical-value tables bundled with the library.
//
// # Safety
// `out` must be valid for a pointer write. Release with [`fc_table_free`].
enum FcStatus fc_table_published(struct FcTable **out);

// Load a critical-value table from a CSV file.
//
// # Safety
// `path` must be a nul-terminated string and `out` valid for a pointer
// write. Release with [`fc_table_free`].
enum FcStatus fc_table_load(const char *path, struct FcTable **out);

// Critical value of the [`FcStatistic`] `statistic` at `(n, θ, level)`,
// interpolated inside the table.
//
// # Safety
// `table` must be a live handle and `out` valid for one `double` write.
enum FcStatus fc_table_lookup(const struct FcTable *table,
                              size_t n,
                              double theta_value,
                              double level,
                              int32_t statistic,
                              double *out);

// Release a table; null is ignored.
//
// # Safety
// `table` must come from this library and not be used afterwards.
void fc_table_free(struct FcTable *table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRANK_COPULA_H */
