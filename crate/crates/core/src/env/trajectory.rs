//! Line-delimited JSON dump of an episode, one record per timestep.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{AgentAction, Physical, Point, RewardBreakdown, StepOutcome, Verbal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// Timestep after the transition (1-based).
    pub t: usize,
    pub positions: Vec<Point>,
    pub goal: Point,
    pub physical: Vec<Physical>,
    pub verbal: Vec<Verbal>,
    pub delivered: Vec<bool>,
    pub budget: f64,
    /// Message slot per sender as seen after the step; `null` is blank.
    pub messages: Vec<Option<Point>>,
    pub r_dist: f64,
    pub r_diff: f64,
    pub reward: f64,
}

impl TrajectoryRecord {
    pub fn from_step(actions: &[AgentAction], outcome: &StepOutcome) -> Self {
        let RewardBreakdown { r_dist, r_diff, reward } = outcome.reward;
        Self {
            t: outcome.state.timestep,
            positions: outcome.state.positions.clone(),
            goal: outcome.state.goal,
            physical: actions.iter().map(|a| a.physical).collect(),
            verbal: actions.iter().map(|a| a.verbal).collect(),
            delivered: outcome.delivered.clone(),
            budget: outcome.state.budget,
            messages: outcome.state.last_messages.clone(),
            r_dist,
            r_diff,
            reward,
        }
    }
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[TrajectoryRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_jsonl(text: &str) -> serde_json::Result<Vec<TrajectoryRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
