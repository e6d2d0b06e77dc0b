#ifndef CMC_H
#define CMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define CMC_OK 0

#define CMC_INVALID_INPUT 2

#define CMC_CAPACITY_EXCEEDED 3

#define CMC_INFERENCE_IMPOSSIBLE 4

#define CMC_NULL_POINTER 5

#define CMC_PANIC 6

/*
 Validated transition kernel.
 */
typedef struct CmcModel CmcModel;

/*
 Logging policy.
 */
typedef struct CmcPolicy CmcPolicy;

/*
 Logged path of states and actions.
 */
typedef struct CmcTrajectory CmcTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer is
 valid until the next call into this library on the same thread.
 */
const char *cmc_last_error_message(void);

/*
 # Safety
 `s` must be NULL or a string returned by this library and not yet freed.
 */
void cmc_string_free(char *s);

/*
 Parses `{"d":..,"k":..,"kernel":[l][s][t]}`.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
int32_t cmc_model_from_json(const char *json, struct CmcModel **out);

/*
 # Safety
 `model` must be a live handle; `d` and `k` must be writable.
 */
int32_t cmc_model_dims(const struct CmcModel *model, uintptr_t *d, uintptr_t *k);

/*
 # Safety
 `model` must be NULL or a handle from [`cmc_model_from_json`] not yet freed.
 */
void cmc_model_free(struct CmcModel *model);

/*
 Parses a policy object tagged by `"kind"`.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
int32_t cmc_policy_from_json(const char *json, struct CmcPolicy **out);

/*
 # Safety
 `policy` must be NULL or a handle from [`cmc_policy_from_json`] not yet freed.
 */
void cmc_policy_free(struct CmcPolicy *policy);

/*
 Simulates `n` steps from a uniform initial state.

 # Safety
 `model` and `policy` must be live handles; `out` must be writable.
 */
int32_t cmc_simulate(const struct CmcModel *model,
                     const struct CmcPolicy *policy,
                     uintptr_t n,
                     uint64_t seed,
                     struct CmcTrajectory **out);

/*
 Builds a trajectory from `len` 1-based states and actions.

 # Safety
 `states` and `actions` must point to `len` readable values; `out` must be writable.
 */
int32_t cmc_trajectory_from_arrays(const uint32_t *states,
                                   const uint32_t *actions,
                                   uintptr_t len,
                                   struct CmcTrajectory **out);

/*
 Number of recorded steps, `n + 1`; 0 for NULL.

 # Safety
 `traj` must be NULL or a live handle.
 */
uintptr_t cmc_trajectory_len(const struct CmcTrajectory *traj);

/*
 Copies the path into `states` and `actions` (1-based); both must hold
 at least `capacity` values and `capacity` must cover the whole path.

 # Safety
 `traj` must be a live handle; the buffers must be writable for `capacity` values.
 */
int32_t cmc_trajectory_copy(const struct CmcTrajectory *traj,
                            uint32_t *states,
                            uint32_t *actions,
                            uintptr_t capacity);

/*
 # Safety
 `traj` must be NULL or a handle from this library not yet freed.
 */
void cmc_trajectory_free(struct CmcTrajectory *traj);

/*
 Count-based estimate for `d` states and `k` actions as JSON.

 # Safety
 `traj` must be a live handle; `out` must be writable.
 */
int32_t cmc_estimate_json(const struct CmcTrajectory *traj, uintptr_t d, uintptr_t k, char **out);

/*
 Pooled chi-square test of the trajectory against `null` at significance `level`.

 # Safety
 `traj` and `null` must be live handles; `out` must be writable.
 */
int32_t cmc_gof_json(const struct CmcTrajectory *traj,
                     const struct CmcModel *null,
                     double level,
                     char **out);

/*
 Plug-in evaluation of a target policy; intervals have confidence `1 − level`.

 # Safety
 `traj` must be a live handle; the JSON arguments NUL-terminated; `out` writable.
 */
int32_t cmc_eval_json(const struct CmcTrajectory *traj,
                      const char *target_json,
                      const char *rewards_json,
                      double level,
                      char **out);

/*
 `P(χ²_df > x)`.

 # Safety
 `out` must be writable.
 */
int32_t cmc_chi_square_survival(double x, double df, double *out);

/*
 Standard normal quantile.

 # Safety
 `out` must be writable.
 */
int32_t cmc_normal_quantile(double p, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CMC_H */
