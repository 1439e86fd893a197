use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::agents::Checkpoint;
use crate::env::trajectory::{write_jsonl, TrajectoryRecord};
use crate::env::{EnvConfig, Observability};
use crate::trainer::{rollout, run::stream_rng, RolloutOptions};
use crate::{Error, Result};

/// Environment overrides applied on top of the checkpoint's own settings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnvOverrides {
    pub budget_messages: Option<u32>,
    pub observability: Option<Observability>,
}

impl EnvOverrides {
    pub fn apply(&self, base: &EnvConfig) -> EnvConfig {
        let mut env = base.clone();
        if let Some(b) = self.budget_messages {
            env.budget_messages = b;
        }
        if let Some(o) = self.observability {
            env.observability = o;
        }
        env
    }
}

/// Greedy episode of `checkpoint` on `env` from `env_seed`.
pub fn trajectory(checkpoint: &Checkpoint, env: &EnvConfig, env_seed: u64) -> Result<Vec<TrajectoryRecord>> {
    if checkpoint.dims.n_agents != env.n_agents {
        return Err(Error::Incompatible(format!(
            "checkpoint has {} agents, environment has {}",
            checkpoint.dims.n_agents, env.n_agents
        )));
    }
    let bundles = checkpoint.to_bundles()?;
    let options = RolloutOptions {
        record_trajectory: true,
        ..RolloutOptions::greedy()
    };
    let mut rng = stream_rng(env_seed, 0);
    Ok(rollout(&bundles, env, env_seed, options, &mut rng)?.trajectory)
}

/// Loads a checkpoint, plays one greedy episode and writes it as JSON lines.
pub fn emit_trajectory(
    checkpoint_path: impl AsRef<Path>,
    env_seed: u64,
    overrides: EnvOverrides,
    out: impl AsRef<Path>,
) -> Result<Vec<TrajectoryRecord>> {
    let checkpoint = Checkpoint::load(checkpoint_path)?;
    let env = overrides.apply(&checkpoint.env);
    env.validate()?;
    let records = trajectory(&checkpoint, &env, env_seed)?;
    let out = out.as_ref();
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    write_jsonl(BufWriter::new(file), &records).map_err(|e| Error::io(out, e))?;
    Ok(records)
}
