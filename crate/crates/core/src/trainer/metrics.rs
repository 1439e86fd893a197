use serde::{Deserialize, Serialize};

use crate::agents::Variant;
use crate::env::Observability;

/// One evaluation row of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run_id: String,
    pub variant: Variant,
    pub observability: Observability,
    pub budget: u32,
    pub seed: u64,
    /// Training episodes completed before this evaluation.
    pub episode: usize,
    /// Mean over evaluation episodes of the per-timestep team distance.
    pub team_distance: f64,
    /// Mean over evaluation episodes of the per-timestep distance difference.
    pub difference: f64,
    /// Mean per evaluation episode.
    pub messages_attempted: f64,
    pub messages_delivered: f64,
    pub train_team_distance: Option<f64>,
    pub train_reward: Option<f64>,
    pub critic_loss: Option<f64>,
    pub actor_objective: Option<f64>,
    pub updates: u64,
    pub divergent_updates: u64,
    /// Episodes in the most recent update batch.
    pub batch_episodes: usize,
    pub wall_clock_secs: Option<f64>,
}

/// Outcome of one update round over all agents.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossReport {
    pub update_index: u64,
    pub critic_loss: Vec<f64>,
    pub actor_objective: Vec<f64>,
    pub critic_grad_norm: Vec<f64>,
    pub actor_grad_norm: Vec<f64>,
    /// Per agent: the critic or actor step was rejected as non-finite.
    pub divergent: Vec<bool>,
}

impl LossReport {
    pub fn any_divergent(&self) -> bool {
        self.divergent.iter().any(|&d| d)
    }

    pub fn mean_critic_loss(&self) -> Option<f64> {
        mean(&self.critic_loss)
    }

    pub fn mean_actor_objective(&self) -> Option<f64> {
        mean(&self.actor_objective)
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    let finite: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64)
}
