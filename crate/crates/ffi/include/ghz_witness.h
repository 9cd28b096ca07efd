/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef GHZ_WITNESS_H
#define GHZ_WITNESS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GwStatus {
  GW_STATUS_OK = 0,
  GW_STATUS_INVALID_ARGUMENT = 1,
  GW_STATUS_SIZE_GUARD = 2,
  GW_STATUS_NULL_POINTER = 3,
  GW_STATUS_INTERNAL = 4,
} GwStatus;

// How `C` is chosen in [`gw_search_optimal`].
typedef enum GwCMode {
  GW_C_MODE_FIXED_AT_SIZE = 0,
  GW_C_MODE_INTEGER_SCAN = 1,
} GwCMode;

// Opaque bound result.
typedef struct GwBoundResult GwBoundResult;

// Opaque search report.
typedef struct GwSearchReport GwSearchReport;

// Opaque setting set.
typedef struct GwSettingSet GwSettingSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *gw_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *gw_version(void);

// Builds a setting set from `len` indices.
//
// # Safety
// `indices` must point to `len` readable values and `out` must be writable.
enum GwStatus gw_setting_set_new(size_t n_parties,
                                 const size_t *indices,
                                 size_t len,
                                 struct GwSettingSet **out);

// # Safety
// `set` must be null or a handle from [`gw_setting_set_new`] not yet freed.
void gw_setting_set_free(struct GwSettingSet *set);

// Number of indices, or 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t gw_setting_set_len(const struct GwSettingSet *set);

// Computes the grid bound for `(set, c)`.
//
// # Safety
// `set` must be a live handle and `out` writable.
enum GwStatus gw_alpha_upper(const struct GwSettingSet *set,
                             double c,
                             double step,
                             uint32_t refine_rounds,
                             struct GwBoundResult **out);

// # Safety
// `result` must be a live handle.
double gw_bound_result_alpha(const struct GwBoundResult *result);

// # Safety
// `result` must be a live handle.
uint64_t gw_bound_result_evaluations(const struct GwBoundResult *result);

// Bipartition size `k` at the maximizing grid point.
//
// # Safety
// `result` must be a live handle.
size_t gw_bound_result_k(const struct GwBoundResult *result);

// # Safety
// `result` must be null or a live handle.
void gw_bound_result_free(struct GwBoundResult *result);

// # Safety
// `out` must be writable.
enum GwStatus gw_noise_threshold_asymptotic(double alpha, size_t size, double c, double *out);

// # Safety
// `out` must be writable.
enum GwStatus gw_noise_threshold_exact(double alpha,
                                       size_t size,
                                       double c,
                                       size_t n_parties,
                                       double *out);

// Best setting set of size `budget`, ranked by the asymptotic threshold.
//
// # Safety
// `out` must be writable.
enum GwStatus gw_search_optimal(size_t n_parties,
                                size_t budget,
                                enum GwCMode c_mode,
                                double step,
                                uint32_t refine_rounds,
                                struct GwSearchReport **out);

// # Safety
// `report` must be a live handle.
double gw_search_report_threshold(const struct GwSearchReport *report);

// # Safety
// `report` must be a live handle.
double gw_search_report_c(const struct GwSearchReport *report);

// # Safety
// `report` must be a live handle.
double gw_search_report_alpha(const struct GwSearchReport *report);

// # Safety
// `report` must be a live handle.
size_t gw_search_report_ties(const struct GwSearchReport *report);

// Copies the best setting indices into `buf`. `out_len` always receives the
// full length; a `capacity` that is too small yields `INVALID_ARGUMENT`.
//
// # Safety
// `report` must be a live handle, `buf` writable for `capacity` values and
// `out_len` writable.
enum GwStatus gw_search_report_settings(const struct GwSearchReport *report,
                                        size_t *buf,
                                        size_t capacity,
                                        size_t *out_len);

// # Safety
// `report` must be null or a live handle.
void gw_search_report_free(struct GwSearchReport *report);

// See-saw lower estimate of the biseparable bound.
//
// # Safety
// `set` must be a live handle and `out` writable.
enum GwStatus gw_alpha_oracle(const struct GwSettingSet *set,
                              double c,
                              size_t restarts,
                              uint64_t seed,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GHZ_WITNESS_H */
