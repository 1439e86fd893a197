//! Recurrent multi-agent deterministic policy gradients (MADDPG and its
//! recurrent-actor, recurrent-critic and recurrent actor-critic variants)
//! on a simultaneous-arrival task with a shared communication budget.
//!
//! Module map:
//! - [`nnet`]: dense/LSTM layers with analytic gradients, Adam, soft updates
//! - [`env`]: the arrival task and its budget protocol
//! - [`agents`]: actor and centralized critic networks, action selection
//! - [`replay`]: episode-granular experience replay
//! - [`trainer`]: critic/actor updates and the training loop
//! - [`experiment`]: grid runner, summaries, trajectory dumps

pub mod agents;
pub mod cli;
pub mod env;
mod error;
pub mod experiment;
pub mod nnet;
pub mod replay;
pub mod trainer;

pub use error::{Error, Result};
