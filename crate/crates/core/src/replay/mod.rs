//! Episode-structured experience replay.
//!
//! Whole episodes are stored so recurrent networks can be re-unrolled from
//! a zero state. Which recurrent states a transition carries depends on the
//! variant: actor states only for a recurrent actor, critic states only for
//! a recurrent critic.

mod buffer;
mod snapshot;
mod transition;

pub use buffer::{ReplayBuffer, DEFAULT_CAPACITY};
pub use transition::{Episode, EpisodeMeta, StatePair, Transition};
