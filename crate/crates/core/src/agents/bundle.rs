use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{StackNet, Variant};
use crate::env::{Observation, ACTION_DIM, OBS_DIM, PHYSICAL_ACTIONS};
use crate::nnet::{AdamState, BatchState, RecurrentState};
use crate::{Error, Result};

/// Dimensions shared by all networks of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDims {
    pub n_agents: usize,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub hidden: usize,
}

impl NetDims {
    pub fn new(n_agents: usize, hidden: usize) -> Self {
        Self {
            n_agents,
            obs_dim: OBS_DIM,
            action_dim: ACTION_DIM,
            hidden,
        }
    }

    pub fn critic_input(&self) -> usize {
        critic_input_dim(self.n_agents, self.obs_dim, self.action_dim)
    }
}

/// `[o_1 … o_N, a_1 … a_N]`.
pub fn critic_input_dim(n_agents: usize, obs_dim: usize, action_dim: usize) -> usize {
    n_agents * (obs_dim + action_dim)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorNet {
    pub net: StackNet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticNet {
    pub net: StackNet,
}

impl ActorNet {
    pub fn new<R: Rng + ?Sized>(dims: NetDims, recurrent: bool, rng: &mut R) -> Self {
        Self {
            net: StackNet::new(dims.obs_dim, dims.hidden, dims.action_dim, recurrent, rng),
        }
    }
}

impl CriticNet {
    pub fn new<R: Rng + ?Sized>(dims: NetDims, recurrent: bool, rng: &mut R) -> Self {
        Self {
            net: StackNet::new(dims.critic_input(), dims.hidden, 1, recurrent, rng),
        }
    }
}

fn check_state(state: &RecurrentState, width: usize) -> Result<()> {
    if state.hidden.len() != width || state.cell.len() != width {
        return Err(Error::shape("recurrent state", width, state.hidden.len()));
    }
    Ok(())
}

/// Logits for one agent: `(physical[5], verbal[2], next_state)`.
pub fn actor_forward(
    actor: &ActorNet,
    obs: &Observation,
    state: &RecurrentState,
) -> Result<([f64; PHYSICAL_ACTIONS], [f64; ACTION_DIM - PHYSICAL_ACTIONS], RecurrentState)> {
    check_state(state, actor.net.hidden_dim())?;
    let x = Array2::from_shape_vec((1, OBS_DIM), obs.flatten().to_vec()).expect("1 x obs");
    let (out, next, _) = actor.net.step(&x, &BatchState::from_single(state))?;
    let row = out.row(0);
    let mut physical = [0.0; PHYSICAL_ACTIONS];
    let mut verbal = [0.0; ACTION_DIM - PHYSICAL_ACTIONS];
    for k in 0..PHYSICAL_ACTIONS {
        physical[k] = row[k];
    }
    for k in 0..verbal.len() {
        verbal[k] = row[PHYSICAL_ACTIONS + k];
    }
    Ok((physical, verbal, next.row(0)))
}

/// `Q_i(o_1…o_N, a_1…a_N)` with the critic's recurrent state.
pub fn critic_forward(
    critic: &CriticNet,
    all_obs: &[f64],
    all_actions: &[f64],
    state: &RecurrentState,
) -> Result<(f64, RecurrentState)> {
    let expected = critic.net.input_dim();
    if all_obs.len() + all_actions.len() != expected {
        return Err(Error::shape("critic input", expected, all_obs.len() + all_actions.len()));
    }
    check_state(state, critic.net.hidden_dim())?;
    let mut input = Vec::with_capacity(expected);
    input.extend_from_slice(all_obs);
    input.extend_from_slice(all_actions);
    let x = Array2::from_shape_vec((1, expected), input).expect("1 x input");
    let (out, next, _) = critic.net.step(&x, &BatchState::from_single(state))?;
    Ok((out[[0, 0]], next.row(0)))
}

/// Everything one agent owns during training.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBundle {
    pub actor: ActorNet,
    pub critic: CriticNet,
    pub target_actor: ActorNet,
    pub target_critic: CriticNet,
    pub actor_state: RecurrentState,
    pub critic_state: RecurrentState,
    pub actor_adam: AdamState,
    pub critic_adam: AdamState,
}

impl AgentBundle {
    /// Fresh networks; targets start as exact copies.
    pub fn new<R: Rng + ?Sized>(variant: Variant, dims: NetDims, rng: &mut R) -> Self {
        let actor = ActorNet::new(dims, variant.actor_recurrent(), rng);
        let critic = CriticNet::new(dims, variant.critic_recurrent(), rng);
        Self::from_nets(actor.clone(), critic.clone(), actor, critic)
    }

    pub fn from_nets(actor: ActorNet, critic: CriticNet, target_actor: ActorNet, target_critic: CriticNet) -> Self {
        let hidden = actor.net.hidden_dim();
        Self {
            actor_adam: AdamState::new(actor.net.params()),
            critic_adam: AdamState::new(critic.net.params()),
            actor_state: RecurrentState::zeros(hidden),
            critic_state: RecurrentState::zeros(critic.net.hidden_dim()),
            actor,
            critic,
            target_actor,
            target_critic,
        }
    }

    pub fn variant(&self) -> Variant {
        Variant::from_spec(super::VariantSpec {
            actor_recurrent: self.actor.net.is_recurrent(),
            critic_recurrent: self.critic.net.is_recurrent(),
        })
    }

    /// Zeroes both recurrent states; called at every episode start.
    pub fn reset_states(&mut self) {
        self.actor_state = RecurrentState::zeros(self.actor.net.hidden_dim());
        self.critic_state = RecurrentState::zeros(self.critic.net.hidden_dim());
    }
}
