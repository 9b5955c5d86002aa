#ifndef CSDLMA_H
#define CSDLMA_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Model-aware strategy selectors for the benchmark functions.
 */
#define CSDLMA_STRATEGY_GREEDY 0

#define CSDLMA_STRATEGY_POLITE 1

typedef enum CsdlmaObservation {
  CSDLMA_OBSERVATION_IDLE = 0,
  CSDLMA_OBSERVATION_BUSY = 1,
  CSDLMA_OBSERVATION_SUCCESSFUL = 2,
  CSDLMA_OBSERVATION_COLLIDED = 3,
} CsdlmaObservation;

typedef enum CsdlmaStatus {
  CSDLMA_STATUS_OK = 0,
  CSDLMA_STATUS_NULL_POINTER = 1,
  CSDLMA_STATUS_INVALID_ARGUMENT = 2,
  CSDLMA_STATUS_CONFIG = 3,
  CSDLMA_STATUS_IO = 4,
  CSDLMA_STATUS_CHECKPOINT = 5,
  CSDLMA_STATUS_BUFFER_TOO_SMALL = 6,
  CSDLMA_STATUS_PANIC = 7,
} CsdlmaStatus;

/**
 * Records of a completed experiment, one per seed.
 */
typedef struct CsdlmaRun CsdlmaRun;

/**
 * A parsed scenario.
 */
typedef struct CsdlmaScenario CsdlmaScenario;

/**
 * A learner and its channel, advanced one decision epoch at a time.
 */
typedef struct CsdlmaSession CsdlmaSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *csdlma_last_error(void);

/**
 * α-fair utility of `x` (clamped below at 1e-6).
 *
 * # Safety
 * `result` must be null or valid for writes.
 */
enum CsdlmaStatus csdlma_alpha_utility(double x, double alpha, double *result);

/**
 * Per-slot throughputs of a model-aware strategy against ALOHA.
 *
 * # Safety
 * `agent` and `aloha` must be null or valid for writes.
 */
enum CsdlmaStatus csdlma_per_slot_throughputs(uint32_t strategy_code,
                                              double q,
                                              size_t slot_len,
                                              double header,
                                              double *agent,
                                              double *aloha);

/**
 * Closed-form `(agent, tdma, aloha)` throughputs of `strategy_code` in the
 * reference TDMA/ALOHA scenario with ALOHA probability `q`. With
 * `minislots > 0` the scripted node is simulated instead.
 *
 * # Safety
 * `throughputs` must be null or valid for 3 writes.
 */
enum CsdlmaStatus csdlma_reference_benchmark(uint32_t strategy_code,
                                             double q,
                                             uint64_t minislots,
                                             uint64_t seed,
                                             double *throughputs);

/**
 * Parses a TOML scenario.
 *
 * # Safety
 * `text` must be null or a nul-terminated string; `scenario` null or valid for writes.
 */
enum CsdlmaStatus csdlma_scenario_from_toml(const char *text, struct CsdlmaScenario **scenario);

/**
 * Loads a TOML scenario file.
 *
 * # Safety
 * `path` must be null or a nul-terminated string; `scenario` null or valid for writes.
 */
enum CsdlmaStatus csdlma_scenario_load(const char *path, struct CsdlmaScenario **scenario);

/**
 * Overrides the decision epochs per run.
 *
 * # Safety
 * `scenario` must be null or a live scenario handle.
 */
enum CsdlmaStatus csdlma_scenario_set_steps(struct CsdlmaScenario *scenario, uint64_t steps);

/**
 * Overrides the fairness exponent.
 *
 * # Safety
 * `scenario` must be null or a live scenario handle.
 */
enum CsdlmaStatus csdlma_scenario_set_alpha(struct CsdlmaScenario *scenario, double alpha);

/**
 * Replaces the seed list.
 *
 * # Safety
 * `scenario` must be null or a live scenario handle; `seeds` valid for `len` reads.
 */
enum CsdlmaStatus csdlma_scenario_set_seeds(struct CsdlmaScenario *scenario,
                                            const uint64_t *seeds,
                                            size_t len);

/**
 * Number of reward components: the learner plus each coexisting node.
 *
 * # Safety
 * `scenario` must be null or a live handle; `nodes` null or valid for writes.
 */
enum CsdlmaStatus csdlma_scenario_nodes(const struct CsdlmaScenario *scenario, size_t *nodes);

/**
 * Releases a scenario handle. Null is ignored.
 *
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void csdlma_scenario_free(struct CsdlmaScenario *scenario);

/**
 * Runs every seed of the scenario to completion.
 *
 * # Safety
 * `scenario` must be null or a live handle; `run` null or valid for writes.
 */
enum CsdlmaStatus csdlma_run(const struct CsdlmaScenario *scenario, struct CsdlmaRun **run);

/**
 * Number of records (seeds) in a run.
 *
 * # Safety
 * `run` must be null or a live handle; `count` null or valid for writes.
 */
enum CsdlmaStatus csdlma_run_count(const struct CsdlmaRun *run, size_t *count);

/**
 * Tail-window throughput mean and standard deviation per node across
 * records. `means` and `stds` must each hold `len` values; `len` must be
 * at least the node count.
 *
 * # Safety
 * `run` must be null or a live handle; `means`/`stds` null or valid for `len` writes.
 */
enum CsdlmaStatus csdlma_run_summary(const struct CsdlmaRun *run,
                                     size_t window,
                                     double *means,
                                     double *stds,
                                     size_t len);

/**
 * Writes the run's cumulative-throughput log as CSV.
 *
 * # Safety
 * `run` must be null or a live handle; `path` null or a nul-terminated string.
 */
enum CsdlmaStatus csdlma_run_write_csv(const struct CsdlmaRun *run, const char *path);

/**
 * Releases a run handle. Null is ignored.
 *
 * # Safety
 * `run` must be null or a handle not yet freed.
 */
void csdlma_run_free(struct CsdlmaRun *run);

/**
 * Starts a learner on the scenario's channel with `seed`.
 *
 * # Safety
 * `scenario` must be null or a live handle; `session` null or valid for writes.
 */
enum CsdlmaStatus csdlma_session_new(const struct CsdlmaScenario *scenario,
                                     uint64_t seed,
                                     struct CsdlmaSession **session);

/**
 * Runs one decision epoch: act, simulate, learn. `member` receives the
 * transmitting member id (1-based) or 0 when the learner sensed.
 *
 * # Safety
 * `session` must be null or a live handle; each output null or valid for writes.
 */
enum CsdlmaStatus csdlma_session_step(struct CsdlmaSession *session,
                                      size_t *action,
                                      enum CsdlmaObservation *observation,
                                      size_t *duration,
                                      size_t *member);

/**
 * Cumulative throughput per node since the session started; `len` must be
 * at least the node count.
 *
 * # Safety
 * `session` must be null or a live handle; `throughputs` null or valid for `len` writes.
 */
enum CsdlmaStatus csdlma_session_throughputs(const struct CsdlmaSession *session,
                                             double *throughputs,
                                             size_t len);

/**
 * Current exploration rate of the session's learner.
 *
 * # Safety
 * `session` must be null or a live handle; `epsilon` null or valid for writes.
 */
enum CsdlmaStatus csdlma_session_epsilon(const struct CsdlmaSession *session, double *epsilon);

/**
 * Saves the session learner's parameters and settings.
 *
 * # Safety
 * `session` must be null or a live handle; `path` null or a nul-terminated string.
 */
enum CsdlmaStatus csdlma_session_save(const struct CsdlmaSession *session, const char *path);

/**
 * Releases a session handle. Null is ignored.
 *
 * # Safety
 * `session` must be null or a handle not yet freed.
 */
void csdlma_session_free(struct CsdlmaSession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSDLMA_H */
