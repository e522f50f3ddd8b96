#ifndef GAUSS_RDP_H
#define GAUSS_RDP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes. Zero is success.
typedef enum GrdpStatus {
  GRDP_STATUS_OK = 0,
  GRDP_STATUS_NULL_POINTER = 1,
  GRDP_STATUS_DOMAIN = 2,
  GRDP_STATUS_USAGE = 3,
  GRDP_STATUS_STATE = 4,
  GRDP_STATUS_NUMERICAL = 5,
  GRDP_STATUS_PRECONDITION = 6,
  // Caller buffer too small; the required length was written.
  GRDP_STATUS_BUFFER_TOO_SMALL = 7,
  // A Rust panic was caught at the boundary.
  GRDP_STATUS_PANIC = 8,
} GrdpStatus;

typedef enum GrdpMeasure {
  GRDP_MEASURE_KL = 0,
  GRDP_MEASURE_W2 = 1,
} GrdpMeasure;

// Opaque finite Gaussian mixture.
typedef struct GrdpMixture GrdpMixture;

// Opaque scalar quantizer.
typedef struct GrdpQuantizer GrdpQuantizer;

// Opaque rate-distortion-perception query.
typedef struct GrdpQuery GrdpQuery;

// A bound value. Optimisers that do not apply are NaN.
typedef struct GrdpBound {
  double value;
  double minimizer_sigma;
  double maximizer_alpha;
} GrdpBound;

typedef struct GrdpTalagrandReport {
  double w2sq;
  double w2sq_error;
  double kl;
  double kl_error;
  double rhs_refined;
  double rhs_original;
  bool holds_refined;
  bool holds_original;
  double slack;
} GrdpTalagrandReport;

typedef struct GrdpQuantizerMetrics {
  double distortion;
  double entropy;
  double lagrangian_cost;
} GrdpQuantizerMetrics;

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into this library on the same thread.
const char *grdp_last_error(void);

// Library version as a static NUL-terminated string.
const char *grdp_version(void);

// Creates a query. Rates and perception may be `INFINITY`; `measure_kind`
// is a [`GrdpMeasure`] value.
//
// # Safety
// `out` must be valid for writes.
enum GrdpStatus grdp_query_new(double mean,
                               double variance,
                               double rate,
                               double common,
                               double perception,
                               int32_t measure_kind,
                               struct GrdpQuery **out);

// # Safety
// `q` must come from [`grdp_query_new`] and not be used afterwards. Null is ignored.
void grdp_query_free(struct GrdpQuery *q);

// # Safety
// `q` must be a live query handle.
enum GrdpStatus grdp_query_set_rate(struct GrdpQuery *q, double rate);

// # Safety
// `q` must be a live query handle.
enum GrdpStatus grdp_query_set_common(struct GrdpQuery *q, double common);

// # Safety
// `q` must be a live query handle.
enum GrdpStatus grdp_query_set_perception(struct GrdpQuery *q, double perception);

// # Safety
// `q` must be a live query handle.
enum GrdpStatus grdp_query_set_measure(struct GrdpQuery *q, int32_t measure_kind);

// Lower bound for the query's measure.
//
// # Safety
// `q` must be a live query handle and `out` valid for writes.
enum GrdpStatus grdp_lower(const struct GrdpQuery *q, struct GrdpBound *out);

// Improved lower bound; W2 queries only.
//
// # Safety
// `q` must be a live query handle and `out` valid for writes.
enum GrdpStatus grdp_improved_lower(const struct GrdpQuery *q, struct GrdpBound *out);

// # Safety
// `q` must be a live query handle and `out` valid for writes.
enum GrdpStatus grdp_upper(const struct GrdpQuery *q, struct GrdpBound *out);

// Bound induced from the other measure: a lower bound for KL queries, an
// upper bound for W2 queries.
//
// # Safety
// `q` must be a live query handle and `out` valid for writes.
enum GrdpStatus grdp_induced(const struct GrdpQuery *q, struct GrdpBound *out);

// Perception level above which the improved W2 lower bound stops helping.
//
// # Safety
// `out` must be valid for writes.
enum GrdpStatus grdp_threshold_perception(double mean,
                                          double variance,
                                          double rate,
                                          double common,
                                          double *out);

// Rate above which the improved W2 lower bound stops helping. May be `INFINITY`.
//
// # Safety
// `out` must be valid for writes.
enum GrdpStatus grdp_threshold_rate(double mean,
                                    double variance,
                                    double common,
                                    double perception,
                                    double *out);

// Rate and distortion of the symmetric binary quantizer with threshold `theta`
// in standard units.
//
// # Safety
// `rate` and `distortion` must be valid for writes.
enum GrdpStatus grdp_binary_point(double mean,
                                  double variance,
                                  double theta,
                                  double *rate,
                                  double *distortion);

// Distortion of the binary construction at a rate in `(0, log 2]`.
//
// # Safety
// `out` must be valid for writes.
enum GrdpStatus grdp_binary_at_rate(double mean, double variance, double rate, double *out);

// Builds a mixture from `n` components given as parallel arrays.
//
// # Safety
// The three arrays must hold `n` values each; `out` must be valid for writes.
enum GrdpStatus grdp_mixture_new(const double *weights,
                                 const double *means,
                                 const double *stds,
                                 size_t n,
                                 struct GrdpMixture **out);

// # Safety
// `m` must come from [`grdp_mixture_new`] and not be used afterwards. Null is ignored.
void grdp_mixture_free(struct GrdpMixture *m);

// Mean and variance of the mixture.
//
// # Safety
// `m` must be a live mixture handle; `mean` and `variance` valid for writes.
enum GrdpStatus grdp_mixture_moments(const struct GrdpMixture *m, double *mean, double *variance);

// Checks the refined transportation inequality between the mixture and the
// Gaussian source. The mixture must match the source mean and have no larger
// deviation, otherwise `Precondition` is returned.
//
// # Safety
// `m` must be a live mixture handle and `out` valid for writes.
enum GrdpStatus grdp_talagrand_check(const struct GrdpMixture *m,
                                     double mean,
                                     double variance,
                                     struct GrdpTalagrandReport *out);

// Designs an entropy-constrained scalar quantizer with at most `n_max` cells
// for multiplier `lambda`.
//
// # Safety
// `out` must be valid for writes.
enum GrdpStatus grdp_ecsq_design(double mean,
                                 double variance,
                                 double lambda,
                                 size_t n_max,
                                 uint64_t seed,
                                 struct GrdpQuantizer **out);

// # Safety
// `q` must come from [`grdp_ecsq_design`] and not be used afterwards. Null is ignored.
void grdp_quantizer_free(struct GrdpQuantizer *q);

// Number of cells, or 0 for a null handle.
//
// # Safety
// `q` must be null or a live quantizer handle.
size_t grdp_quantizer_len(const struct GrdpQuantizer *q);

// Copies the reconstruction levels into `buf`. `len` receives the count even
// when `cap` is too small.
//
// # Safety
// `q` must be a live handle, `buf` valid for `cap` writes, `len` valid for writes.
enum GrdpStatus grdp_quantizer_levels(const struct GrdpQuantizer *q,
                                      double *buf,
                                      size_t cap,
                                      size_t *len);

// Copies the cell boundaries (one fewer than the levels).
//
// # Safety
// As for [`grdp_quantizer_levels`].
enum GrdpStatus grdp_quantizer_boundaries(const struct GrdpQuantizer *q,
                                          double *buf,
                                          size_t cap,
                                          size_t *len);

// Copies the cell probabilities under the design source.
//
// # Safety
// As for [`grdp_quantizer_levels`].
enum GrdpStatus grdp_quantizer_probabilities(const struct GrdpQuantizer *q,
                                             double *buf,
                                             size_t cap,
                                             size_t *len);

// Reconstruction of `x`, or NaN for a null handle.
//
// # Safety
// `q` must be null or a live quantizer handle.
double grdp_quantizer_apply(const struct GrdpQuantizer *q, double x);

// Distortion, output entropy and Lagrangian cost against a Gaussian source.
//
// # Safety
// `q` must be a live handle and `out` valid for writes.
enum GrdpStatus grdp_quantizer_metrics(const struct GrdpQuantizer *q,
                                       double mean,
                                       double variance,
                                       double lambda,
                                       struct GrdpQuantizerMetrics *out);

#endif  /* GAUSS_RDP_H */
