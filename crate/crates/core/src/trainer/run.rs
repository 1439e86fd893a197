use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{rollout, EpisodeBatch, EpisodeStats, Learner, LossReport, MetricsRecord, RolloutOptions, TrainConfig};
use crate::agents::{AgentBundle, Checkpoint, NetDims, SelectMode, Variant};
use crate::env::{EnvConfig, Observability};
use crate::replay::ReplayBuffer;
use crate::Result;

/// Independent random streams of one run.
pub(crate) mod stream {
    pub const INIT: u64 = 0;
    pub const ENV: u64 = 1;
    pub const EXPLORE: u64 = 2;
    pub const UPDATE: u64 = 3;
    pub const EVAL: u64 = 4;
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run_id(observability: Observability, variant: Variant, budget: u32, seed: u64) -> String {
    format!("{observability}-{variant}-b{budget}-s{seed}")
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub checkpoint: Checkpoint,
    pub episodes: usize,
    pub updates: u64,
    pub divergent_updates: u64,
    /// Stopped early after too many consecutive divergent rounds.
    pub aborted: bool,
}

/// Initial networks for a run seed.
pub fn init_bundles(env: &EnvConfig, variant: Variant, cfg: &TrainConfig, seed: u64) -> Vec<AgentBundle> {
    let mut rng = stream_rng(seed, stream::INIT);
    let dims = NetDims::new(env.n_agents, cfg.hidden);
    (0..env.n_agents).map(|_| AgentBundle::new(variant, dims, &mut rng)).collect()
}

/// Means over greedy evaluation episodes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalSummary {
    pub stats: EpisodeStats,
    pub attempted: f64,
    pub delivered: f64,
}

/// Greedy episodes on fresh seeds drawn from `rng`.
pub fn evaluate(bundles: &[AgentBundle], env: &EnvConfig, episodes: usize, rng: &mut ChaCha8Rng) -> Result<EvalSummary> {
    let mut stats = EpisodeStats::default();
    let (mut attempted, mut delivered) = (0.0, 0.0);
    for _ in 0..episodes {
        let seed = rng.gen();
        let r = rollout(bundles, env, seed, RolloutOptions::greedy(), rng)?;
        stats.team_distance += r.stats.team_distance;
        stats.difference += r.stats.difference;
        stats.reward += r.stats.reward;
        stats.steps += r.stats.steps;
        attempted += f64::from(r.stats.messages_attempted);
        delivered += f64::from(r.stats.messages_delivered);
    }
    let n = episodes as f64;
    stats.team_distance /= n;
    stats.difference /= n;
    stats.reward /= n;
    Ok(EvalSummary {
        stats,
        attempted: attempted / n,
        delivered: delivered / n,
    })
}

/// Trains one (variant, environment, seed) cell and streams evaluation rows
/// into `sink`. Evaluations happen before training, after every
/// `eval_period` episodes and after the final episode.
pub fn train_run(
    env: &EnvConfig,
    variant: Variant,
    cfg: &TrainConfig,
    seed: u64,
    sink: &mut dyn FnMut(MetricsRecord) -> Result<()>,
) -> Result<RunOutput> {
    env.validate()?;
    cfg.validate()?;
    let started = Instant::now();
    let id = run_id(env.observability, variant, env.budget_messages, seed);
    let mut learner = Learner::new(variant, init_bundles(env, variant, cfg, seed), cfg);
    let mut buffer = ReplayBuffer::new(variant.spec(), cfg.buffer_capacity)?;
    let mut env_rng = stream_rng(seed, stream::ENV);
    let mut explore_rng = stream_rng(seed, stream::EXPLORE);
    let mut update_rng = stream_rng(seed, stream::UPDATE);
    let mut eval_rng = stream_rng(seed, stream::EVAL);

    let mut pending_steps = 0usize;
    let mut divergent_updates = 0u64;
    let mut consecutive_divergent = 0usize;
    let mut aborted = false;
    let mut last_report: Option<LossReport> = None;
    let mut last_train: Option<EpisodeStats> = None;
    let mut last_batch = 0usize;
    let mut completed = 0usize;

    let mut emit = |episode: usize,
                    learner: &Learner,
                    report: &Option<LossReport>,
                    train: &Option<EpisodeStats>,
                    batch: usize,
                    divergent: u64,
                    rng: &mut ChaCha8Rng|
     -> Result<()> {
        let ev = evaluate(&learner.bundles, env, cfg.eval_episodes, rng)?;
        sink(MetricsRecord {
            run_id: id.clone(),
            variant,
            observability: env.observability,
            budget: env.budget_messages,
            seed,
            episode,
            team_distance: ev.stats.team_distance,
            difference: ev.stats.difference,
            messages_attempted: ev.attempted,
            messages_delivered: ev.delivered,
            train_team_distance: train.map(|s| s.team_distance),
            train_reward: train.map(|s| s.reward),
            critic_loss: report.as_ref().and_then(LossReport::mean_critic_loss),
            actor_objective: report.as_ref().and_then(LossReport::mean_actor_objective),
            updates: learner.updates,
            divergent_updates: divergent,
            batch_episodes: batch,
            wall_clock_secs: cfg.record_wall_clock.then(|| started.elapsed().as_secs_f64()),
        })
    };

    if cfg.total_episodes > 0 {
        emit(0, &learner, &last_report, &last_train, 0, 0, &mut eval_rng)?;
    }
    while completed < cfg.total_episodes {
        let temperature = cfg.temperature_at(completed);
        let options = RolloutOptions {
            mode: SelectMode::Explore { temperature },
            record_transitions: true,
            record_trajectory: false,
        };
        let env_seed = env_rng.gen();
        let mut played = rollout(&learner.bundles, env, env_seed, options, &mut explore_rng)?;
        let mut episode = played.episode.take().expect("transitions recorded");
        episode.meta.index = completed as u64;
        pending_steps += episode.len();
        buffer.push_episode(episode)?;
        last_train = Some(played.stats);
        completed += 1;

        while pending_steps >= cfg.update_period_timesteps {
            pending_steps -= cfg.update_period_timesteps;
            let batch_size = cfg.batch_episodes.min(buffer.num_episodes());
            let sampled = buffer.sample_batch(batch_size, &mut update_rng)?;
            let batch = EpisodeBatch::from_episodes(&sampled, variant.spec())?;
            let report = learner.update_round(&batch, temperature, &mut update_rng)?;
            last_batch = batch_size;
            if report.any_divergent() {
                divergent_updates += 1;
                consecutive_divergent += 1;
            } else {
                consecutive_divergent = 0;
            }
            last_report = Some(report);
            if consecutive_divergent >= cfg.max_consecutive_divergent {
                aborted = true;
                break;
            }
        }

        let final_episode = completed == cfg.total_episodes;
        if aborted || completed.is_multiple_of(cfg.eval_period) || final_episode {
            emit(
                completed,
                &learner,
                &last_report,
                &last_train,
                last_batch,
                divergent_updates,
                &mut eval_rng,
            )?;
        }
        if aborted {
            break;
        }
    }

    Ok(RunOutput {
        checkpoint: Checkpoint::from_bundles(variant, env, &learner.bundles),
        episodes: completed,
        updates: learner.updates,
        divergent_updates,
        aborted,
    })
}
