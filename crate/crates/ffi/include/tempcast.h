#ifndef TEMPCAST_H
#define TEMPCAST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_CONFIG = 2,
  TC_STATUS_INVALID_INPUT = 3,
  // The frame is older than the previous one and was dropped.
  TC_STATUS_LATE_FRAME = 4,
  // The output buffer cannot hold one forecast.
  TC_STATUS_BUFFER_TOO_SMALL = 5,
  // A weight became non-finite; the engine should be discarded.
  TC_STATUS_MODEL_DIVERGED = 6,
  TC_STATUS_INTERNAL = 7,
} TcStatus;

// Opaque engine handle.
typedef struct TcEngine TcEngine;

// Engine parameters. `hidden == 0` selects the single-layer perceptron.
typedef struct TcEngineConfig {
  uint32_t inputs;
  uint32_t hidden;
  uint32_t outputs;
  double quarter_secs;
  uint32_t max_gap;
  double eta0;
  double gamma;
  double epsilon;
  uint64_t seed;
} TcEngineConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Default configuration: 8 inputs, 8 hidden units, 8 outputs, 900 s
// quarters, resets after gaps of more than 4 quarters, shipped MLP schedule.
struct TcEngineConfig tc_engine_config_default(void);

// Creates an engine. On success `*out` owns it; free it with
// [`tc_engine_free`].
//
// # Safety
// `config` must point to a valid config and `out` to writable storage.
enum TcStatus tc_engine_new(const struct TcEngineConfig *config, struct TcEngine **out);

// Releases an engine. Null is ignored.
//
// # Safety
// `engine` must come from [`tc_engine_new`] and not be used afterwards.
void tc_engine_free(struct TcEngine *engine);

// Feeds one frame (`t` in seconds, `v` in degrees).
//
// If a forecast was produced, its `outputs` values are written to `out`,
// `*written` is set to their count and `*origin` to the index of the
// quarter it was made from; otherwise `*written` is 0. `cap` must be at
// least `outputs`. `origin` may be null. A frame that closes several
// quarters at once reports only the newest forecast.
//
// # Safety
// `engine` must be a live handle, `out` must hold `cap` doubles and
// `written` must be writable.
enum TcStatus tc_engine_push(struct TcEngine *engine,
                             double t,
                             double v,
                             double *out,
                             size_t cap,
                             size_t *written,
                             int64_t *origin);

// Persistent model and ring-buffer bytes, or 0 for null.
//
// # Safety
// `engine` must be null or a live handle.
size_t tc_engine_memory_bytes(const struct TcEngine *engine);

// Weight updates performed so far, or 0 for null.
//
// # Safety
// `engine` must be null or a live handle.
uint64_t tc_engine_updates(const struct TcEngine *engine);

// Resets caused by long gaps, or 0 for null.
//
// # Safety
// `engine` must be null or a live handle.
uint64_t tc_engine_resets(const struct TcEngine *engine);

// Late frames dropped so far, or 0 for null.
//
// # Safety
// `engine` must be null or a live handle.
uint64_t tc_engine_dropped(const struct TcEngine *engine);

// Mean absolute error of `n` forecast values against `n` realized values.
//
// # Safety
// `forecast` and `actual` must hold `n` doubles; `out` must be writable.
enum TcStatus tc_mae(const double *forecast, const double *actual, size_t n, double *out);

// Message of the last failed call on this thread ("" if none). The
// pointer stays valid until the next failing call on the same thread.
const char *tc_last_error_message(void);

// Static description of a status code.
const char *tc_status_str(enum TcStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEMPCAST_H */
