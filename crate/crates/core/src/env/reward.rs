use serde::{Deserialize, Serialize};

use super::{distance, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Sum of each agent's distance to the goal ("team distance").
    pub r_dist: f64,
    /// Sum over agent pairs of the absolute difference in goal distance.
    pub r_diff: f64,
    /// Training signal, `−(r_dist + r_diff)`.
    pub reward: f64,
}

/// Team reward for agents at `positions` around `goal`.
pub fn compute_reward(positions: &[Point], goal: Point) -> RewardBreakdown {
    let d: Vec<f64> = positions.iter().map(|&p| distance(p, goal)).collect();
    let r_dist: f64 = d.iter().sum();
    let mut r_diff = 0.0;
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            r_diff += (d[i] - d[j]).abs();
        }
    }
    RewardBreakdown {
        r_dist,
        r_diff,
        reward: -(r_dist + r_diff),
    }
}
