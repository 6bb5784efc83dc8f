#ifndef GRADSYNC_H
#define GRADSYNC_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_ARGUMENT = 1,
  GS_STATUS_INVALID_UTF8 = 2,
  GS_STATUS_INVALID_CONFIG = 3,
  GS_STATUS_IO = 4,
  GS_STATUS_INTERNAL = 5,
} GsStatus;

/**
 * A completed simulation with its analysis.
 */
typedef struct GsRun GsRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Validates and runs a configuration given as JSON: a run config, a preset
 * spec such as `{"preset": "wait_chain", "size": 8}`, or a summary from an
 * earlier run. On success `*out` receives a handle to free with
 * `gs_run_free`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GsStatus gs_run_from_json(const char *config_json, struct GsRun **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `run` must come from `gs_run_from_json` and not be used afterwards.
 */
void gs_run_free(struct GsRun *run);

/**
 * Summary JSON: resolved config, seed, drift, skew report and verdicts.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum GsStatus gs_run_summary_json(const struct GsRun *run, char **out);

/**
 * Trace CSV with columns `time,node,logical,rate,alpha,event_kind`.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum GsStatus gs_run_trace_csv(const struct GsRun *run, char **out);

/**
 * Largest skew between any two clocks over the run.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum GsStatus gs_run_global_skew(const struct GsRun *run, double *out);

/**
 * Largest skew between neighbors over the run.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum GsStatus gs_run_neighbor_skew(const struct GsRun *run, double *out);

/**
 * Sets `*out` to 1 if every guaranteed bound held, 0 otherwise.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum GsStatus gs_run_bounds_hold(const struct GsRun *run, int32_t *out);

/**
 * Checks a configuration without running it. Returns `GS_STATUS_OK` when
 * valid, otherwise `GS_STATUS_INVALID_CONFIG` with the violations in
 * `gs_last_error`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string.
 */
enum GsStatus gs_validate_json(const char *config_json);

/**
 * Run config JSON for a named preset. `size` 0 keeps the preset default.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GsStatus gs_preset_json(const char *name, uint32_t size, char **out);

/**
 * `min(D, (1 + rho_hat) * D * d / c)`.
 */
double gs_wait_chain_length(uint32_t diameter, double rho_hat, double d, double c);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library on the same thread.
 */
const char *gs_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void gs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRADSYNC_H */
