use serde::{Deserialize, Serialize};

use super::Point;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observability {
    Full,
    Partial,
}

impl Observability {
    pub fn as_str(self) -> &'static str {
        match self {
            Observability::Full => "full",
            Observability::Partial => "partial",
        }
    }
}

impl std::str::FromStr for Observability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Observability::Full),
            "partial" => Ok(Observability::Partial),
            _ => Err(Error::Config(format!("unknown observability {s:?} (full|partial)"))),
        }
    }
}

impl std::fmt::Display for Observability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalPlacement {
    Random,
    Fixed(Point),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub n_agents: usize,
    pub episode_length: usize,
    /// Total messages the team may send per episode (`x`); zero disables messaging.
    pub budget_messages: u32,
    pub observability: Observability,
    pub world_half_extent: f64,
    pub step_size: f64,
    pub goal_placement: GoalPlacement,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_agents: 2,
            episode_length: 100,
            budget_messages: 20,
            observability: Observability::Partial,
            world_half_extent: 1.0,
            step_size: 0.1,
            goal_placement: GoalPlacement::Random,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::Config("n_agents must be positive".into()));
        }
        if self.episode_length == 0 {
            return Err(Error::Config("episode_length must be at least 1".into()));
        }
        if !(self.world_half_extent > 0.0 && self.world_half_extent.is_finite()) {
            return Err(Error::Config("world_half_extent must be positive".into()));
        }
        if !(self.step_size > 0.0 && self.step_size < self.world_half_extent) {
            return Err(Error::Config(
                "step_size must be positive and smaller than world_half_extent".into(),
            ));
        }
        if let GoalPlacement::Fixed(g) = self.goal_placement {
            if g.iter().any(|c| !c.is_finite() || c.abs() > self.world_half_extent) {
                return Err(Error::Config(format!("fixed goal {g:?} lies outside the world")));
            }
        }
        Ok(())
    }

    pub fn budget_step(&self) -> f64 {
        if self.budget_messages == 0 {
            0.0
        } else {
            1.0 / self.budget_messages as f64
        }
    }
}
