#ifndef QKDNET_H
#define QKDNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of a call.
 */
typedef enum QkdStatus {
  QKD_STATUS_OK = 0,
  QKD_STATUS_NULL_POINTER = 1,
  QKD_STATUS_INVALID_ARGUMENT = 2,
  QKD_STATUS_IO = 3,
  QKD_STATUS_PARSE = 4,
  QKD_STATUS_MODEL = 5,
  QKD_STATUS_SOLVER_LIMIT = 6,
  QKD_STATUS_SOLVER = 7,
  QKD_STATUS_PANIC = 8,
} QkdStatus;

/*
 A topology with its demand, packet size and system parameters.
 */
typedef struct QkdInstance QkdInstance;

/*
 System parameters.
 */
typedef struct QkdParams QkdParams;

/*
 Rows of a placement or selection study.
 */
typedef struct QkdReport QkdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 Valid until the next call on the same thread.
 */
const char *qkdnet_last_error(void);

/*
 Creates the reference system parameters.

 # Safety
 `out` must be valid for writes.
 */
enum QkdStatus qkdnet_params_new(struct QkdParams **out);

/*
 Loads system parameters from a file.

 # Safety
 `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum QkdStatus qkdnet_params_load(const char *path, struct QkdParams **out);

/*
 Turns the finite-key analysis on or off.

 # Safety
 `params` must come from this library.
 */
enum QkdStatus qkdnet_params_set_finite_key(struct QkdParams *params, bool on);

/*
 # Safety
 `params` must come from this library and not be used afterwards.
 */
void qkdnet_params_free(struct QkdParams *params);

/*
 Secret key rate in bits/s of one link of `length_km`.

 # Safety
 `params` must come from this library and `out` be valid for writes.
 */
enum QkdStatus qkdnet_key_rate(const struct QkdParams *params, double length_km, double *out);

/*
 Loads a topology file and builds an instance.

 With `demand_bps > 0` every ordered pair of non-optional nodes gets that
 demand and key consumption ratio `beta`; otherwise the file's connections
 are used and a positive `beta` overrides theirs. `params` may be null for
 the reference system.

 # Safety
 Pointers must be valid; `params` may be null.
 */
enum QkdStatus qkdnet_instance_load(const char *topology_path,
                                    const struct QkdParams *params,
                                    double demand_bps,
                                    double beta,
                                    uint32_t packet_bits,
                                    struct QkdInstance **out);

/*
 Sets the branch-and-bound node limit used by later solves.

 # Safety
 `instance` must come from this library.
 */
enum QkdStatus qkdnet_instance_set_node_limit(struct QkdInstance *instance, uint64_t limit);

/*
 # Safety
 `instance` must come from this library and not be used afterwards.
 */
void qkdnet_instance_free(struct QkdInstance *instance);

/*
 Communication bound of the instance.

 # Safety
 `instance` must come from this library and `out` be valid for writes.
 */
enum QkdStatus qkdnet_bound(const struct QkdInstance *instance, double *out);

/*
 Adds one QKD system to each candidate edge in turn. With `len == 0`
 every active edge is a candidate. Row 0 of the report is the baseline,
 labelled `none`.

 # Safety
 `edges` must point to `len` strings; `instance` must come from this
 library and `out` be valid for writes.
 */
enum QkdStatus qkdnet_place(const struct QkdInstance *instance,
                            const char *const *edges,
                            uintptr_t len,
                            uintptr_t workers,
                            struct QkdReport **out);

/*
 Evaluates every subset of the optional nodes. With `len == 0` all
 optional nodes of the topology are used. Labels join node ids with `+`;
 the empty subset is `none`.

 # Safety
 `nodes` must point to `len` strings; `instance` must come from this
 library and `out` be valid for writes.
 */
enum QkdStatus qkdnet_select(const struct QkdInstance *instance,
                             const char *const *nodes,
                             uintptr_t len,
                             uintptr_t workers,
                             struct QkdReport **out);

/*
 Number of rows, or 0 for a null report.

 # Safety
 `report` must come from this library or be null.
 */
uintptr_t qkdnet_report_len(const struct QkdReport *report);

/*
 Label of row `index`, or null when out of range. Owned by the report.

 # Safety
 `report` must come from this library or be null.
 */
const char *qkdnet_report_label(const struct QkdReport *report, uintptr_t index);

/*
 Bound of row `index`.

 # Safety
 `report` must come from this library and `out` be valid for writes.
 */
enum QkdStatus qkdnet_report_bound(const struct QkdReport *report, uintptr_t index, double *out);

/*
 The report as CSV. Owned by the report.

 # Safety
 `report` must come from this library or be null.
 */
const char *qkdnet_report_csv(const struct QkdReport *report);

/*
 # Safety
 `report` must come from this library and not be used afterwards.
 */
void qkdnet_report_free(struct QkdReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QKDNET_H */
