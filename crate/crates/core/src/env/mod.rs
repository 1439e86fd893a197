//! Simultaneous-arrival task: N agents share a goal and a depletable
//! budget of position broadcasts.

mod action;
mod config;
mod observation;
mod reward;
pub mod trajectory;
mod world;

pub use action::{AgentAction, Physical, Verbal, ACTION_DIM, PHYSICAL_ACTIONS, VERBAL_ACTIONS};
pub use config::{EnvConfig, GoalPlacement, Observability};
pub use observation::{build_observation, Observation, OBS_COMPONENTS, OBS_DIM};
pub use reward::{compute_reward, RewardBreakdown};
pub use world::{reset, step, StepOutcome, WorldState};

/// A point in the plane.
pub type Point = [f64; 2];

/// Message slot value meaning "no position received".
pub const BLANK: Point = [-1.0, -1.0];

pub(crate) fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
