use serde::{Deserialize, Serialize};

use crate::agents::HIDDEN;
use crate::replay::DEFAULT_CAPACITY;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub tau: f64,
    pub gamma: f64,
    /// Replay capacity in transitions.
    pub buffer_capacity: usize,
    /// Episodes per update batch; clamped to the number stored.
    pub batch_episodes: usize,
    /// Environment timesteps between update rounds.
    pub update_period_timesteps: usize,
    pub total_episodes: usize,
    pub hidden: usize,
    /// Relaxation temperature at the first and last training episode,
    /// interpolated linearly.
    pub temperature: f64,
    pub temperature_final: f64,
    /// Global gradient-norm clip per network update; `None` disables.
    pub grad_clip: Option<f64>,
    /// Training episodes between evaluations.
    pub eval_period: usize,
    /// Greedy episodes averaged per evaluation.
    pub eval_episodes: usize,
    /// Abort after this many consecutive update rounds with a divergent step.
    pub max_consecutive_divergent: usize,
    pub record_wall_clock: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            tau: 0.01,
            gamma: 0.95,
            buffer_capacity: DEFAULT_CAPACITY,
            batch_episodes: 256,
            update_period_timesteps: 100,
            total_episodes: 2000,
            hidden: HIDDEN,
            temperature: 1.0,
            temperature_final: 1.0,
            grad_clip: Some(0.5),
            eval_period: 50,
            eval_episodes: 10,
            max_consecutive_divergent: 10,
            record_wall_clock: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lr", self.lr),
            ("temperature", self.temperature),
            ("temperature_final", self.temperature_final),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        let counts = [
            ("buffer_capacity", self.buffer_capacity),
            ("batch_episodes", self.batch_episodes),
            ("update_period_timesteps", self.update_period_timesteps),
            ("hidden", self.hidden),
            ("eval_period", self.eval_period),
            ("eval_episodes", self.eval_episodes),
            ("max_consecutive_divergent", self.max_consecutive_divergent),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::Config(format!("grad_clip must be positive, got {c}")));
            }
        }
        Ok(())
    }

    pub fn temperature_at(&self, episode: usize) -> f64 {
        if self.total_episodes <= 1 {
            return self.temperature;
        }
        let frac = episode.min(self.total_episodes - 1) as f64 / (self.total_episodes - 1) as f64;
        self.temperature + frac * (self.temperature_final - self.temperature)
    }
}
