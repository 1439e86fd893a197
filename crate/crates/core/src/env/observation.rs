use serde::{Deserialize, Serialize};

use super::{EnvConfig, Observability, Point, WorldState, BLANK};
use crate::{Error, Result};

/// Number of logical components: own position, goal, message, budget.
/// Positions and the message are 2-D points, so the flat vector is longer.
pub const OBS_COMPONENTS: usize = 4;
/// Flattened length `[p_x, p_y, g_x, g_y, m_x, m_y, b]`.
pub const OBS_DIM: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub own_position: Point,
    pub goal: Point,
    /// `None` is the blank message; it flattens to `(−1, −1)`.
    pub message: Option<Point>,
    pub budget: f64,
}

impl Observation {
    pub fn flatten(&self) -> [f64; OBS_DIM] {
        let m = self.message.unwrap_or(BLANK);
        [
            self.own_position[0],
            self.own_position[1],
            self.goal[0],
            self.goal[1],
            m[0],
            m[1],
            self.budget,
        ]
    }

    pub fn is_blank(&self) -> bool {
        self.message.is_none()
    }
}

/// Agent `agent`'s view of `state`.
///
/// The single message slot carries the lowest-indexed other agent whose
/// message is present: the true position under full observability, the
/// last delivered broadcast under partial observability.
pub fn build_observation(state: &WorldState, agent: usize, config: &EnvConfig) -> Result<Observation> {
    let n = state.positions.len();
    if agent >= n {
        return Err(Error::AgentIndex { index: agent, n_agents: n });
    }
    let others = (0..n).filter(|&j| j != agent);
    let message = match config.observability {
        Observability::Full => others.map(|j| state.positions[j]).next(),
        Observability::Partial => others.filter_map(|j| state.last_messages[j]).next(),
    };
    Ok(Observation {
        own_position: state.positions[agent],
        goal: state.goal,
        message,
        budget: state.budget,
    })
}
