#ifndef RMADDPG_H
#define RMADDPG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Flattened observation width per agent.
 */
#define RMADDPG_OBS_DIM 7

#define RMADDPG_PHYSICAL_ACTIONS 5

#define RMADDPG_VERBAL_ACTIONS 2

typedef enum RmaddpgObservability {
  RMADDPG_OBSERVABILITY_FULL = 0,
  RMADDPG_OBSERVABILITY_PARTIAL = 1,
} RmaddpgObservability;

typedef enum RmaddpgStatus {
  RMADDPG_STATUS_OK = 0,
  RMADDPG_STATUS_NULL_POINTER = 1,
  RMADDPG_STATUS_INVALID_ARGUMENT = 2,
  RMADDPG_STATUS_BUFFER_TOO_SMALL = 3,
  RMADDPG_STATUS_EPISODE_FINISHED = 4,
  RMADDPG_STATUS_IO = 5,
  RMADDPG_STATUS_FORMAT = 6,
  RMADDPG_STATUS_INCOMPATIBLE = 7,
  RMADDPG_STATUS_NUMERICAL = 8,
  /**
   * At least one grid cell of a training job failed or aborted.
   */
  RMADDPG_STATUS_RUN_FAILED = 9,
  RMADDPG_STATUS_PANIC = 10,
} RmaddpgStatus;

/**
 * Opaque environment handle.
 */
typedef struct RmaddpgEnv RmaddpgEnv;

/**
 * Opaque greedy policy handle built from a checkpoint.
 */
typedef struct RmaddpgPolicy RmaddpgPolicy;

/**
 * Environment settings; start from [`rmaddpg_env_config_default`].
 */
typedef struct RmaddpgEnvConfig {
  uint32_t n_agents;
  uint32_t episode_length;
  uint32_t budget_messages;
  enum RmaddpgObservability observability;
} RmaddpgEnvConfig;

typedef struct RmaddpgReward {
  double r_dist;
  double r_diff;
  double reward;
} RmaddpgReward;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *rmaddpg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rmaddpg_version(void);

struct RmaddpgEnvConfig rmaddpg_env_config_default(void);

/**
 * Rewards for `n_agents` positions given as `[x0, y0, x1, y1, …]`.
 *
 * # Safety
 * `positions` must point to `2 * n_agents` readable doubles and `out` to
 * a writable [`RmaddpgReward`].
 */
enum RmaddpgStatus rmaddpg_compute_reward(const double *positions,
                                          size_t n_agents,
                                          double goal_x,
                                          double goal_y,
                                          struct RmaddpgReward *out);

/**
 * # Safety
 * `config` must be readable and `out` writable.
 */
enum RmaddpgStatus rmaddpg_env_new(const struct RmaddpgEnvConfig *config, struct RmaddpgEnv **out);

/**
 * # Safety
 * `env` must come from [`rmaddpg_env_new`] and not be used afterwards.
 * Null is ignored.
 */
void rmaddpg_env_free(struct RmaddpgEnv *env);

/**
 * Starts an episode and writes `n_agents * RMADDPG_OBS_DIM` observation
 * values.
 *
 * # Safety
 * `env` must be a live handle; `obs` must hold `obs_len` doubles.
 */
enum RmaddpgStatus rmaddpg_env_reset(struct RmaddpgEnv *env,
                                     uint64_t seed,
                                     double *obs,
                                     size_t obs_len);

/**
 * Advances one timestep. `physical[i]` indexes none/north/east/west/south
 * and `verbal[i]` communicate/silent.
 *
 * # Safety
 * `physical` and `verbal` must hold `n_agents` values, `obs` `obs_len`
 * doubles; `reward` and `done` must be writable.
 */
enum RmaddpgStatus rmaddpg_env_step(struct RmaddpgEnv *env,
                                    const uint32_t *physical,
                                    const uint32_t *verbal,
                                    size_t n_agents,
                                    double *obs,
                                    size_t obs_len,
                                    struct RmaddpgReward *reward,
                                    bool *done);

/**
 * Remaining budget fraction in `[0, 1]`.
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum RmaddpgStatus rmaddpg_env_budget(const struct RmaddpgEnv *env, double *out);

/**
 * Agent positions as `[x0, y0, x1, y1, …]`.
 *
 * # Safety
 * `env` must be a live handle; `out` must hold `len` doubles.
 */
enum RmaddpgStatus rmaddpg_env_positions(const struct RmaddpgEnv *env, double *out, size_t len);

/**
 * Loads a checkpoint file as a greedy policy with zeroed recurrent state.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum RmaddpgStatus rmaddpg_policy_load(const char *path, struct RmaddpgPolicy **out);

/**
 * # Safety
 * `policy` must come from [`rmaddpg_policy_load`] and not be used
 * afterwards. Null is ignored.
 */
void rmaddpg_policy_free(struct RmaddpgPolicy *policy);

/**
 * Number of agents the policy controls.
 *
 * # Safety
 * `policy` must be a live handle.
 */
size_t rmaddpg_policy_n_agents(const struct RmaddpgPolicy *policy);

/**
 * Zeroes the recurrent state; call at every episode start.
 *
 * # Safety
 * `policy` must be a live handle.
 */
enum RmaddpgStatus rmaddpg_policy_reset(struct RmaddpgPolicy *policy);

/**
 * Greedy joint action for the flattened observations of every agent
 * (`n_agents * RMADDPG_OBS_DIM` values, as written by the env functions).
 *
 * # Safety
 * `obs` must hold `n_agents * RMADDPG_OBS_DIM` doubles; `physical` and
 * `verbal` must hold `n_agents` writable values.
 */
enum RmaddpgStatus rmaddpg_policy_act(struct RmaddpgPolicy *policy,
                                      const double *obs,
                                      size_t n_agents,
                                      uint32_t *physical,
                                      uint32_t *verbal);

/**
 * Runs the experiment grid described by a TOML spec file, writing the
 * usual run directories and manifest.
 *
 * # Safety
 * `spec_path` must be a NUL-terminated string.
 */
enum RmaddpgStatus rmaddpg_run_experiment(const char *spec_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RMADDPG_H */
