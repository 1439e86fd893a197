//! Centralized-critic TD regression, deterministic policy gradients through
//! a straight-through action relaxation, target tracking, and the
//! rollout/update schedule.

mod batch;
mod config;
mod metrics;
mod rollout;
pub(crate) mod run;
mod update;

pub use batch::EpisodeBatch;
pub use config::TrainConfig;
pub use metrics::{LossReport, MetricsRecord};
pub use rollout::{rollout, EpisodeStats, Rollout, RolloutOptions};
pub use run::{evaluate, init_bundles, run_id, train_run, EvalSummary, RunOutput};
pub use update::{target_update, ActorReport, CriticReport, Learner};
