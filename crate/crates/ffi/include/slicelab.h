#ifndef SLICELAB_H
#define SLICELAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_IO = 3,
  SL_STATUS_PARSE = 4,
  SL_STATUS_INTERNAL = 5,
} SlStatus;

typedef enum SlScheduler {
  SL_SCHEDULER_RR = 0,
  SL_SCHEDULER_WF = 1,
  SL_SCHEDULER_PF = 2,
} SlScheduler;

typedef enum SlActionSpace {
  SL_ACTION_SPACE_SLICING = 0,
  SL_ACTION_SPACE_SCHEDULING = 1,
  SL_ACTION_SPACE_JOINT = 2,
} SlActionSpace;

/**
 * Opaque trained policy with its state encoder.
 */
typedef struct SlPolicy SlPolicy;

/**
 * Opaque simulated cell.
 */
typedef struct SlSim SlSim;

/**
 * One slice measurement. Arrays of three are ordered eMBB, mMTC, URLLC.
 */
typedef struct SlKpm {
  uint64_t tti;
  double dl_throughput_mbps;
  double buffer_bytes;
  double tx_packets;
} SlKpm;

typedef struct SlWeights {
  double embb;
  double mmtc;
  double urllc;
} SlWeights;

/**
 * A control decision. Fields behind a zero `has_*` flag are unset.
 */
typedef struct SlAction {
  uint8_t has_partition;
  uint32_t partition[3];
  uint8_t has_schedulers;
  enum SlScheduler schedulers[3];
} SlAction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sl_version(void);

/**
 * Message of the last failed call on this thread, or an empty string.
 * Valid until the next call into the library from the same thread.
 */
const char *sl_last_error(void);

/**
 * Creates the default cell (two UEs per slice) seeded with `seed`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SlStatus sl_sim_new(uint64_t seed, struct SlSim **out);

/**
 * Creates a built-in scenario by name (`default` or `contended`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` writable.
 */
enum SlStatus sl_sim_new_named(const char *name, uint64_t seed, struct SlSim **out);

/**
 * Creates a cell from a scenario JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum SlStatus sl_sim_new_json(const char *json, uint64_t seed, struct SlSim **out);

/**
 * Releases a cell. Null is ignored.
 *
 * # Safety
 * `sim` must come from a `sl_sim_new*` call and not be used afterwards.
 */
void sl_sim_free(struct SlSim *sim);

/**
 * Sets the PRB split; it governs every TTI served afterwards.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum SlStatus sl_sim_set_partition(struct SlSim *sim, uint32_t embb, uint32_t mmtc, uint32_t urllc);

/**
 * Sets the per-slice schedulers (eMBB, mMTC, URLLC).
 *
 * # Safety
 * `sim` must be a live handle and `schedulers` point to three values.
 */
enum SlStatus sl_sim_set_schedulers(struct SlSim *sim, const enum SlScheduler *schedulers);

/**
 * Serves `ttis` TTIs and writes the per-slice KPMs measured over them to
 * `kpms` (three entries).
 *
 * # Safety
 * `sim` must be a live handle and `kpms` point to three writable entries.
 */
enum SlStatus sl_sim_run(struct SlSim *sim, uint64_t ttis, struct SlKpm *kpms);

/**
 * Current TTI counter of the cell.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum SlStatus sl_sim_tti(const struct SlSim *sim, uint64_t *out);

/**
 * Reward weights `alpha/a`, `beta/b`, `gamma_u/c`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SlStatus sl_compute_weights(double alpha,
                                 double beta,
                                 double gamma_u,
                                 double a,
                                 double b,
                                 double c,
                                 struct SlWeights *out);

/**
 * Per-step reward of three slice KPMs under `weights`.
 *
 * # Safety
 * `kpms` must point to three entries; `weights` and `out` must be valid.
 */
enum SlStatus sl_step_reward(const struct SlKpm *kpms,
                             const struct SlWeights *weights,
                             double *out);

/**
 * Loads a policy file and the encoder it names.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum SlStatus sl_policy_load(const char *path, struct SlPolicy **out);

/**
 * Releases a policy. Null is ignored.
 *
 * # Safety
 * `policy` must come from [`sl_policy_load`] and not be used afterwards.
 */
void sl_policy_free(struct SlPolicy *policy);

/**
 * The parameter family the policy controls.
 *
 * # Safety
 * `policy` must be a live handle and `out` writable.
 */
enum SlStatus sl_policy_action_space(const struct SlPolicy *policy, enum SlActionSpace *out);

/**
 * Greedy action for one observation: `windows` holds 90 values, per slice
 * (eMBB, mMTC, URLLC) ten rows of throughput Mbps, buffer bytes and
 * transmitted packets.
 *
 * # Safety
 * `policy` must be a live handle, `windows` point to 90 values and `out`
 * be writable.
 */
enum SlStatus sl_policy_act(struct SlPolicy *policy, const double *windows, struct SlAction *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLICELAB_H */
