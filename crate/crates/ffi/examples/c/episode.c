/* Plays one episode with fixed actions and prints the final reward. */
#include <stdio.h>

#include "rmaddpg.h"

int main(void) {
    RmaddpgEnvConfig cfg = rmaddpg_env_config_default();
    cfg.observability = RMADDPG_OBSERVABILITY_FULL;
    RmaddpgEnv *env = NULL;
    if (rmaddpg_env_new(&cfg, &env) != RMADDPG_STATUS_OK) {
        fprintf(stderr, "env_new: %s\n", rmaddpg_last_error());
        return 1;
    }
    double obs[2 * RMADDPG_OBS_DIM];
    rmaddpg_env_reset(env, 7, obs, 2 * RMADDPG_OBS_DIM);

    uint32_t physical[2] = {1, 3};
    uint32_t verbal[2] = {1, 1};
    RmaddpgReward reward;
    bool done = false;
    int steps = 0;
    while (!done) {
        RmaddpgStatus s = rmaddpg_env_step(env, physical, verbal, 2, obs, 2 * RMADDPG_OBS_DIM, &reward, &done);
        if (s != RMADDPG_STATUS_OK) {
            fprintf(stderr, "env_step: %s\n", rmaddpg_last_error());
            return 1;
        }
        steps++;
    }
    printf("steps=%d reward=%.6f\n", steps, reward.reward);
    rmaddpg_env_free(env);
    return 0;
}
