use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    build_observation, compute_reward, AgentAction, EnvConfig, GoalPlacement, Observability,
    Observation, Point, RewardBreakdown, Verbal,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub positions: Vec<Point>,
    pub goal: Point,
    /// Remaining fraction of the budget in `[0, 1]`.
    pub budget: f64,
    /// Messages still allowed this episode; `budget == remaining / x`.
    pub messages_remaining: u32,
    pub timestep: usize,
    /// Per-sender message slot visible to others; `None` is blank.
    pub last_messages: Vec<Option<Point>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: WorldState,
    pub observations: Vec<Observation>,
    pub reward: RewardBreakdown,
    pub done: bool,
    /// Agents that chose `communicate`.
    pub attempted: Vec<bool>,
    /// Agents whose message went out (budget was positive).
    pub delivered: Vec<bool>,
}

fn observe_all(state: &WorldState, config: &EnvConfig) -> Vec<Observation> {
    (0..state.positions.len())
        .map(|i| build_observation(state, i, config).expect("index in range"))
        .collect()
}

/// Starts an episode; identical seeds give identical states.
pub fn reset(config: &EnvConfig, seed: u64) -> Result<(WorldState, Vec<Observation>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = config.world_half_extent;
    let mut sample = || [rng.gen_range(-w..=w), rng.gen_range(-w..=w)];
    let positions: Vec<Point> = (0..config.n_agents).map(|_| sample()).collect();
    let goal = match config.goal_placement {
        GoalPlacement::Random => sample(),
        GoalPlacement::Fixed(g) => g,
    };
    let last_messages = match config.observability {
        Observability::Full => positions.iter().copied().map(Some).collect(),
        Observability::Partial => vec![None; config.n_agents],
    };
    let state = WorldState {
        positions,
        goal,
        budget: if config.budget_messages > 0 { 1.0 } else { 0.0 },
        messages_remaining: config.budget_messages,
        timestep: 0,
        last_messages,
    };
    let obs = observe_all(&state, config);
    Ok((state, obs))
}

/// Advances one timestep.
///
/// Agents move first; a `communicate` choice then spends `1/x` of the
/// budget (in agent order) and makes the sender's new position visible in
/// the next observations. Reward is evaluated on the post-move state.
pub fn step(state: &WorldState, actions: &[AgentAction], config: &EnvConfig) -> Result<StepOutcome> {
    let n = state.positions.len();
    if actions.len() != n {
        return Err(Error::shape("joint action", n, actions.len()));
    }
    if state.timestep >= config.episode_length {
        return Err(Error::EpisodeFinished(state.timestep));
    }
    let w = config.world_half_extent;
    let mut next = state.clone();
    for (p, a) in next.positions.iter_mut().zip(actions) {
        let d = a.physical.direction();
        p[0] = (p[0] + config.step_size * d[0]).clamp(-w, w);
        p[1] = (p[1] + config.step_size * d[1]).clamp(-w, w);
    }

    let attempted: Vec<bool> = actions.iter().map(|a| a.verbal == Verbal::Communicate).collect();
    let mut delivered = vec![false; n];
    for i in 0..n {
        if attempted[i] && next.messages_remaining > 0 {
            next.messages_remaining -= 1;
            delivered[i] = true;
        }
    }
    next.budget = if config.budget_messages == 0 {
        0.0
    } else {
        next.messages_remaining as f64 / config.budget_messages as f64
    };
    next.last_messages = match config.observability {
        Observability::Full => next.positions.iter().copied().map(Some).collect(),
        Observability::Partial => (0..n)
            .map(|i| delivered[i].then_some(next.positions[i]))
            .collect(),
    };
    next.timestep += 1;

    let reward = compute_reward(&next.positions, next.goal);
    let observations = observe_all(&next, config);
    let done = next.timestep == config.episode_length;
    Ok(StepOutcome {
        state: next,
        observations,
        reward,
        done,
        attempted,
        delivered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Physical, BLANK};

    fn cfg(x: u32, obs: Observability) -> EnvConfig {
        EnvConfig {
            budget_messages: x,
            observability: obs,
            ..EnvConfig::default()
        }
    }

    fn act(p: Physical, v: Verbal) -> AgentAction {
        AgentAction::new(p, v)
    }

    #[test]
    fn initial_budget_depends_on_allowance() {
        assert_eq!(reset(&cfg(0, Observability::Partial), 1).unwrap().0.budget, 0.0);
        assert_eq!(reset(&cfg(20, Observability::Partial), 1).unwrap().0.budget, 1.0);
    }

    #[test]
    fn reset_is_deterministic_and_in_bounds() {
        let c = cfg(20, Observability::Partial);
        let (a, oa) = reset(&c, 42).unwrap();
        let (b, ob) = reset(&c, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(oa, ob);
        assert!(a.positions.iter().all(|p| p[0].abs() <= 1.0 && p[1].abs() <= 1.0));
        assert!(oa.iter().all(Observation::is_blank));
        assert_ne!(reset(&c, 43).unwrap().0, a);
    }

    #[test]
    fn zero_agents_rejected() {
        let c = EnvConfig {
            n_agents: 0,
            ..EnvConfig::default()
        };
        assert!(reset(&c, 0).is_err());
    }

    #[test]
    fn one_message_spends_one_twentieth() {
        let c = cfg(20, Observability::Partial);
        let (s, _) = reset(&c, 5).unwrap();
        let out = step(
            &s,
            &[act(Physical::None, Verbal::Communicate), act(Physical::None, Verbal::Silent)],
            &c,
        )
        .unwrap();
        assert!((out.state.budget - 0.95).abs() < 1e-15);
        assert_eq!(out.delivered, vec![true, false]);
        assert_eq!(out.observations[1].message, Some(s.positions[0]));
        assert!(out.observations[0].is_blank());
    }

    #[test]
    fn exhausted_budget_delivers_blank() {
        let c = cfg(0, Observability::Partial);
        let (s, _) = reset(&c, 5).unwrap();
        let both = [act(Physical::East, Verbal::Communicate); 2];
        let out = step(&s, &both, &c).unwrap();
        assert_eq!(out.state.budget, 0.0);
        assert_eq!(out.delivered, vec![false, false]);
        assert_eq!(out.attempted, vec![true, true]);
        assert_eq!(out.observations[0].flatten()[4..6], BLANK);
    }

    #[test]
    fn agents_resting_on_goal_are_a_fixed_point() {
        let c = cfg(20, Observability::Partial);
        let (mut s, _) = reset(&c, 1).unwrap();
        s.positions = vec![s.goal; 2];
        let out = step(&s, &[act(Physical::None, Verbal::Silent); 2], &c).unwrap();
        assert_eq!(out.reward.reward, 0.0);
        assert_eq!(out.state.positions, s.positions);
    }

    #[test]
    fn movement_clamps_to_world() {
        let c = cfg(0, Observability::Partial);
        let (mut s, _) = reset(&c, 1).unwrap();
        s.positions = vec![[0.95, 0.0], [0.0, -0.97]];
        let out = step(
            &s,
            &[act(Physical::East, Verbal::Silent), act(Physical::South, Verbal::Silent)],
            &c,
        )
        .unwrap();
        assert_eq!(out.state.positions, vec![[1.0, 0.0], [0.0, -1.0]]);
    }

    #[test]
    fn full_observability_always_sees_true_positions() {
        let c = cfg(0, Observability::Full);
        let (s, obs) = reset(&c, 8).unwrap();
        assert_eq!(obs[0].message, Some(s.positions[1]));
        let out = step(&s, &[act(Physical::North, Verbal::Silent); 2], &c).unwrap();
        assert_eq!(out.observations[1].message, Some(out.state.positions[0]));
    }

    #[test]
    fn stepping_past_the_horizon_fails() {
        let c = EnvConfig {
            episode_length: 2,
            ..cfg(0, Observability::Partial)
        };
        let (s, _) = reset(&c, 0).unwrap();
        let a = [act(Physical::None, Verbal::Silent); 2];
        let s1 = step(&s, &a, &c).unwrap();
        assert!(!s1.done);
        let s2 = step(&s1.state, &a, &c).unwrap();
        assert!(s2.done);
        assert!(matches!(step(&s2.state, &a, &c), Err(Error::EpisodeFinished(2))));
    }

    #[test]
    fn observation_index_out_of_range() {
        let c = cfg(0, Observability::Partial);
        let (s, _) = reset(&c, 0).unwrap();
        assert!(build_observation(&s, 2, &c).is_err());
    }
}
