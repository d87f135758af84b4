#ifndef XBANDIT_H
#define XBANDIT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum XbStatus {
  XB_STATUS_OK = 0,
  XB_STATUS_NULL_POINTER = 1,
  XB_STATUS_INVALID_PARAMS = 2,
  XB_STATUS_DOMAIN = 3,
  /**
   * Simulation failure: missing entry, divergence or barrier timeout.
   */
  XB_STATUS_SIMULATION = 4,
  XB_STATUS_OUT_OF_RANGE = 5,
  XB_STATUS_PANIC = 6,
} XbStatus;

typedef enum XbObjective {
  XB_OBJECTIVE_DOUBLE_SINE = 0,
  XB_OBJECTIVE_GARLAND = 1,
} XbObjective;

typedef enum XbRunner {
  /**
   * Single-process reference implementation.
   */
  XB_RUNNER_SERIAL = 0,
  /**
   * Lock-step agent simulation over a broadcast bus.
   */
  XB_RUNNER_DISTRIBUTED = 1,
} XbRunner;

/**
 * Opaque run configuration.
 */
typedef struct XbConfig XbConfig;

/**
 * Opaque run outcome.
 */
typedef struct XbResult XbResult;

/**
 * One completed level of a run.
 */
typedef struct XbLevel {
  uint32_t depth;
  uint64_t set_size;
  uint64_t t_h;
  double best_mean;
  uint64_t expanded;
} XbLevel;

/**
 * Inputs of the bound calculators.
 */
typedef struct XbBoundParams {
  double d;
  double c;
  double nu1;
  double rho;
  uint64_t players;
  uint64_t budget;
  double delta;
} XbBoundParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or null if none
 * failed yet. Valid until the next failing call on the same thread.
 */
const char *xb_last_error(void);

/**
 * Static description of a status code.
 */
const char *xb_status_str(enum XbStatus status);

/**
 * Creates a configuration with default δ and smoothness constants,
 * Gaussian noise with σ = 0.1, and seed 0.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum XbStatus xb_config_new(enum XbObjective objective,
                            uint64_t players,
                            uint64_t budget,
                            struct XbConfig **out);

/**
 * # Safety
 * `config` must be null or a pointer from [`xb_config_new`] not yet freed.
 */
void xb_config_free(struct XbConfig *config);

/**
 * # Safety
 * `config` must be a live configuration handle.
 */
enum XbStatus xb_config_set_delta(struct XbConfig *config, double delta);

/**
 * # Safety
 * `config` must be a live configuration handle.
 */
enum XbStatus xb_config_set_smoothness(struct XbConfig *config, double nu1, double rho, double nu2);

/**
 * Noise-free rewards.
 *
 * # Safety
 * `config` must be a live configuration handle.
 */
enum XbStatus xb_config_set_noise_none(struct XbConfig *config);

/**
 * Gaussian noise of standard deviation `sigma`; `reject` redraws out-of-range
 * rewards instead of clamping them.
 *
 * # Safety
 * `config` must be a live configuration handle.
 */
enum XbStatus xb_config_set_noise_gaussian(struct XbConfig *config, double sigma, bool reject);

/**
 * Uniform noise on `[-halfwidth, halfwidth]`, clamped.
 *
 * # Safety
 * `config` must be a live configuration handle.
 */
enum XbStatus xb_config_set_noise_uniform(struct XbConfig *config, double halfwidth);

/**
 * # Safety
 * `config` must be a live configuration handle.
 */
enum XbStatus xb_config_set_seed(struct XbConfig *config, uint64_t seed);

/**
 * Runs one configuration. Both runners produce identical results.
 *
 * # Safety
 * `config` must be a live configuration handle and `out` valid for writes.
 */
enum XbStatus xb_run(const struct XbConfig *config, enum XbRunner runner, struct XbResult **out);

/**
 * # Safety
 * `result` must be null or a pointer from [`xb_run`] not yet freed.
 */
void xb_result_free(struct XbResult *result);

/**
 * False if not even the root level fit in the budget.
 *
 * # Safety
 * `result` must be a live result handle.
 */
bool xb_result_completed(const struct XbResult *result);

/**
 * Output point `x(n)`; NaN for a null handle.
 *
 * # Safety
 * `result` must be a live result handle.
 */
double xb_result_x(const struct XbResult *result);

/**
 * Simple regret `f* - f(x(n))`; NaN for a null handle.
 *
 * # Safety
 * `result` must be a live result handle.
 */
double xb_result_loss(const struct XbResult *result);

/**
 * Deepest expanded depth, `-1` if no level completed or the handle is null.
 *
 * # Safety
 * `result` must be a live result handle.
 */
int64_t xb_result_h_max(const struct XbResult *result);

/**
 * # Safety
 * `result` must be a live result handle.
 */
uint64_t xb_result_rounds(const struct XbResult *result);

/**
 * Values broadcast by each player.
 *
 * # Safety
 * `result` must be a live result handle.
 */
uint64_t xb_result_messages(const struct XbResult *result);

/**
 * # Safety
 * `result` must be a live result handle.
 */
uint64_t xb_result_evals_per_player(const struct XbResult *result);

/**
 * # Safety
 * `result` must be a live result handle.
 */
uint64_t xb_result_total_pulls(const struct XbResult *result);

/**
 * Number of completed levels.
 *
 * # Safety
 * `result` must be a live result handle.
 */
uint64_t xb_result_level_count(const struct XbResult *result);

/**
 * # Safety
 * `result` must be a live result handle and `out` valid for writes.
 */
enum XbStatus xb_result_level(const struct XbResult *result, uint64_t index, struct XbLevel *out);

/**
 * Per-player pulls of each node at `depth` for a set of `set_size` nodes.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum XbStatus xb_compute_t(uint32_t depth,
                           uint64_t set_size,
                           uint64_t players,
                           double delta,
                           double nu1,
                           double rho,
                           uint64_t *out);

/**
 * Radius of the aggregated estimate after `t` pulls per player.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum XbStatus xb_confidence_radius(uint32_t depth,
                                   uint64_t set_size,
                                   uint64_t t,
                                   uint64_t players,
                                   double delta,
                                   double *out);

/**
 * # Safety
 * `params` must be readable and `out` valid for writes.
 */
enum XbStatus xb_c1_constant(const struct XbBoundParams *params, double *out);

/**
 * # Safety
 * `params` must be readable and `out` valid for writes.
 */
enum XbStatus xb_loss_upper_bound(const struct XbBoundParams *params, double *out);

/**
 * # Safety
 * `params` must be readable and `out` valid for writes.
 */
enum XbStatus xb_hmax_lower_bound(const struct XbBoundParams *params, double *out);

/**
 * # Safety
 * `params` must be readable and `out` valid for writes.
 */
enum XbStatus xb_rounds_upper_bound(const struct XbBoundParams *params, double *out);

/**
 * # Safety
 * `params` must be readable and `out` valid for writes.
 */
enum XbStatus xb_messages_upper_bound(const struct XbBoundParams *params,
                                      uint32_t h_max,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XBANDIT_H */
