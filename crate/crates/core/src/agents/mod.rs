//! Actor and centralized-critic networks in the four architectural variants.

mod action;
mod bundle;
mod checkpoint;
mod network;
mod variant;

pub use action::{
    greedy_action, gumbel_noise, relaxed_backward, select_action, straight_through, ActionSample, Relaxed,
    SelectMode,
};
pub use bundle::{actor_forward, critic_forward, critic_input_dim, ActorNet, AgentBundle, CriticNet, NetDims};
pub use checkpoint::{AgentNets, Checkpoint};
pub use network::{StackCache, StackNet, Unroll};
pub use variant::{Variant, VariantSpec};

/// Width of every hidden layer.
pub const HIDDEN: usize = 64;
