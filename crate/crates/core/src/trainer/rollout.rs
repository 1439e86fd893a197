use std::sync::Arc;

use rand::Rng;

use crate::agents::{actor_forward, critic_forward, select_action, AgentBundle, SelectMode, VariantSpec};
use crate::env::trajectory::TrajectoryRecord;
use crate::env::{self, AgentAction, EnvConfig, ACTION_DIM, OBS_DIM};
use crate::nnet::RecurrentState;
use crate::replay::{Episode, EpisodeMeta, StatePair, Transition};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutOptions {
    pub mode: SelectMode,
    /// Keep transitions (with recurrent states) for replay.
    pub record_transitions: bool,
    pub record_trajectory: bool,
}

impl RolloutOptions {
    pub fn greedy() -> Self {
        Self {
            mode: SelectMode::Greedy,
            record_transitions: false,
            record_trajectory: false,
        }
    }
}

/// Per-episode summary; distances are per-timestep means.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeStats {
    pub team_distance: f64,
    pub difference: f64,
    pub reward: f64,
    pub messages_attempted: u32,
    pub messages_delivered: u32,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct Rollout {
    pub episode: Option<Episode>,
    pub stats: EpisodeStats,
    pub trajectory: Vec<TrajectoryRecord>,
}

fn pairs(before: &[Arc<RecurrentState>], after: &[Arc<RecurrentState>]) -> Vec<StatePair> {
    before
        .iter()
        .zip(after)
        .map(|(b, a)| StatePair {
            before: b.clone(),
            after: a.clone(),
        })
        .collect()
}

/// Plays one episode of `env_cfg` from `env_seed`. Recurrent states start
/// at zero; the critic is stepped alongside the actors only when its states
/// need to be stored.
pub fn rollout<R: Rng + ?Sized>(
    bundles: &[AgentBundle],
    env_cfg: &EnvConfig,
    env_seed: u64,
    options: RolloutOptions,
    rng: &mut R,
) -> Result<Rollout> {
    if bundles.len() != env_cfg.n_agents {
        return Err(Error::Incompatible(format!(
            "{} agent networks for an environment of {} agents",
            bundles.len(),
            env_cfg.n_agents
        )));
    }
    let spec = VariantSpec {
        actor_recurrent: bundles[0].actor.net.is_recurrent(),
        critic_recurrent: bundles[0].critic.net.is_recurrent(),
    };
    let keep_actor = options.record_transitions && spec.actor_recurrent;
    let keep_critic = options.record_transitions && spec.critic_recurrent;

    let (mut state, mut obs) = env::reset(env_cfg, env_seed)?;
    let mut actor_states: Vec<Arc<RecurrentState>> = bundles
        .iter()
        .map(|b| Arc::new(RecurrentState::zeros(b.actor.net.hidden_dim())))
        .collect();
    let mut critic_states: Vec<Arc<RecurrentState>> = bundles
        .iter()
        .map(|b| Arc::new(RecurrentState::zeros(b.critic.net.hidden_dim())))
        .collect();

    let mut transitions = Vec::new();
    let mut trajectory = Vec::new();
    let mut stats = EpisodeStats::default();
    let (mut sum_dist, mut sum_diff, mut sum_reward) = (0.0, 0.0, 0.0);
    loop {
        let flat_obs: Vec<[f64; OBS_DIM]> = obs.iter().map(|o| o.flatten()).collect();
        let mut actions: Vec<AgentAction> = Vec::with_capacity(bundles.len());
        let mut one_hots: Vec<[f64; ACTION_DIM]> = Vec::with_capacity(bundles.len());
        let mut next_actor = Vec::with_capacity(bundles.len());
        for (i, b) in bundles.iter().enumerate() {
            let (phys, verbal, next) = actor_forward(&b.actor, &obs[i], &actor_states[i])?;
            let sample = select_action(&phys, &verbal, options.mode, rng)?;
            actions.push(sample.action);
            one_hots.push(sample.one_hot);
            next_actor.push(if spec.actor_recurrent {
                Arc::new(next)
            } else {
                actor_states[i].clone()
            });
        }
        let next_critic: Vec<Arc<RecurrentState>> = if keep_critic {
            let all_obs: Vec<f64> = flat_obs.iter().flatten().copied().collect();
            let all_act: Vec<f64> = one_hots.iter().flatten().copied().collect();
            bundles
                .iter()
                .zip(&critic_states)
                .map(|(b, c)| critic_forward(&b.critic, &all_obs, &all_act, c).map(|(_, s)| Arc::new(s)))
                .collect::<Result<_>>()?
        } else {
            critic_states.clone()
        };

        let out = env::step(&state, &actions, env_cfg)?;
        sum_dist += out.reward.r_dist;
        sum_diff += out.reward.r_diff;
        sum_reward += out.reward.reward;
        stats.messages_attempted += out.attempted.iter().filter(|&&a| a).count() as u32;
        stats.messages_delivered += out.delivered.iter().filter(|&&d| d).count() as u32;
        if options.record_trajectory {
            trajectory.push(TrajectoryRecord::from_step(&actions, &out));
        }
        if options.record_transitions {
            transitions.push(Transition {
                obs: flat_obs,
                actions: one_hots,
                next_obs: out.observations.iter().map(|o| o.flatten()).collect(),
                reward: out.reward.reward,
                actor_states: keep_actor.then(|| pairs(&actor_states, &next_actor)),
                critic_states: keep_critic.then(|| pairs(&critic_states, &next_critic)),
                terminal: out.done,
            });
        }
        actor_states = next_actor;
        critic_states = next_critic;
        stats.steps += 1;
        let done = out.done;
        state = out.state;
        obs = out.observations;
        if done {
            break;
        }
    }
    let steps = stats.steps as f64;
    stats.team_distance = sum_dist / steps;
    stats.difference = sum_diff / steps;
    stats.reward = sum_reward / steps;
    Ok(Rollout {
        episode: options.record_transitions.then(|| {
            Episode::new(
                transitions,
                EpisodeMeta {
                    seed: env_seed,
                    index: 0,
                },
            )
        }),
        stats,
        trajectory,
    })
}
