#ifndef DCS_H
#define DCS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DcsStatus {
  DCS_STATUS_OK = 0,
  DCS_STATUS_NULL_POINTER = 1,
  DCS_STATUS_INVALID_ARGUMENT = 2,
  DCS_STATUS_CAPABILITY = 3,
  DCS_STATUS_RUNTIME = 4,
  DCS_STATUS_PANIC = 5,
} DcsStatus;

/**
 * Opaque decoding graph.
 */
typedef struct DcsGraph DcsGraph;

/**
 * Decoding of one syndrome with both confidence scores.
 */
typedef struct DcsScore {
  double correction_weight;
  /**
   * Parity of the correction across the logical cut.
   */
  bool logical_parity;
  double gap;
  double swim;
} DcsScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Code-capacity graph with `d_z` rows and `d_x - 1` detector columns.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DcsStatus dcs_graph_code_capacity(size_t d_x, size_t d_z, double p, struct DcsGraph **out);

/**
 * Phenomenological graph of distance `d` over `rounds` measurement rounds.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DcsStatus dcs_graph_phenomenological(size_t d,
                                          size_t rounds,
                                          double p_data,
                                          double p_meas,
                                          struct DcsGraph **out);

/**
 * Graph from its JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DcsStatus dcs_graph_from_json(const char *json, struct DcsGraph **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void dcs_graph_free(struct DcsGraph *graph);

/**
 * Number of detectors; 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t dcs_graph_num_detectors(const struct DcsGraph *graph);

/**
 * Number of edges; 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t dcs_graph_num_edges(const struct DcsGraph *graph);

/**
 * Decodes `syndrome` and computes the complementary gap and swim distance.
 *
 * # Safety
 * `syndrome` must point to `len` readable ids (or be null with `len == 0`)
 * and `out` must be writable.
 */
enum DcsStatus dcs_score(const struct DcsGraph *graph,
                         const size_t *syndrome,
                         size_t len,
                         struct DcsScore *out);

/**
 * Exact log10 success odds of the minimum-weight correction. Returns
 * `DCS_STATUS_CAPABILITY` for graphs beyond the enumeration bound.
 *
 * # Safety
 * As for [`dcs_score`]; `out_lambda` and `out_p_l` must be writable.
 */
enum DcsStatus dcs_exact_log_odds(const struct DcsGraph *graph,
                                  const size_t *syndrome,
                                  size_t len,
                                  double *out_lambda,
                                  double *out_p_l);

/**
 * Logical error probability of `len` independent windows.
 *
 * # Safety
 * `ps` must point to `len` readable values; `out` must be writable.
 */
enum DcsStatus dcs_compose_lep(const double *ps, size_t len, double *out);

/**
 * Mean processor time per accepted `n`-window circuit at discard fraction `f`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DcsStatus dcs_time_overhead(double f, uint64_t n, double *out);

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *dcs_last_error(void);

/**
 * Static name of a status code.
 */
const char *dcs_status_name(enum DcsStatus status);

/**
 * Library version as a static string.
 */
const char *dcs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DCS_H */
