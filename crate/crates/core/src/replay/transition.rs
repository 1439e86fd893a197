use std::sync::Arc;

use crate::agents::VariantSpec;
use crate::env::{ACTION_DIM, OBS_DIM};
use crate::nnet::RecurrentState;
use crate::{Error, Result};

/// Recurrent state before and after one timestep. Consecutive transitions
/// of an episode share the `after`/`before` allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub before: Arc<RecurrentState>,
    pub after: Arc<RecurrentState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<[f64; OBS_DIM]>,
    pub actions: Vec<[f64; ACTION_DIM]>,
    pub next_obs: Vec<[f64; OBS_DIM]>,
    /// Shared team reward.
    pub reward: f64,
    /// Per agent, present iff the actor is recurrent.
    pub actor_states: Option<Vec<StatePair>>,
    /// Per agent, present iff the critic is recurrent.
    pub critic_states: Option<Vec<StatePair>>,
    pub terminal: bool,
}

impl Transition {
    pub fn n_agents(&self) -> usize {
        self.obs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EpisodeMeta {
    pub seed: u64,
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    pub meta: EpisodeMeta,
}

fn chained(a: &Arc<RecurrentState>, b: &Arc<RecurrentState>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn states_of<'a>(tr: &'a Transition, kind: &str) -> Option<&'a Vec<StatePair>> {
    if kind == "actor" {
        tr.actor_states.as_ref()
    } else {
        tr.critic_states.as_ref()
    }
}

impl Episode {
    pub fn new(transitions: Vec<Transition>, meta: EpisodeMeta) -> Self {
        Self { transitions, meta }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn n_agents(&self) -> usize {
        self.transitions.first().map_or(0, Transition::n_agents)
    }

    /// Checks the invariants replay relies on, against the buffer's variant.
    pub fn validate(&self, spec: VariantSpec) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidEpisode(msg));
        let Some(first) = self.transitions.first() else {
            return bad("episode has no transitions".into());
        };
        let n = first.n_agents();
        if n == 0 {
            return bad("transition has no agents".into());
        }
        let last = self.transitions.len() - 1;
        for (t, tr) in self.transitions.iter().enumerate() {
            if tr.actions.len() != n || tr.next_obs.len() != n || tr.obs.len() != n {
                return bad(format!("t={t}: per-agent fields disagree on agent count"));
            }
            if tr.actor_states.is_some() != spec.actor_recurrent {
                return bad(format!("t={t}: actor states present={} but variant expects {}", tr.actor_states.is_some(), spec.actor_recurrent));
            }
            if tr.critic_states.is_some() != spec.critic_recurrent {
                return bad(format!("t={t}: critic states present={} but variant expects {}", tr.critic_states.is_some(), spec.critic_recurrent));
            }
            for states in [&tr.actor_states, &tr.critic_states].into_iter().flatten() {
                if states.len() != n {
                    return bad(format!("t={t}: {} recurrent states for {n} agents", states.len()));
                }
            }
            let finite = tr.reward.is_finite()
                && tr.obs.iter().chain(&tr.next_obs).flatten().all(|v| v.is_finite())
                && tr.actions.iter().flatten().all(|v| v.is_finite());
            if !finite {
                return bad(format!("t={t}: non-finite values"));
            }
            if tr.terminal && t != last {
                return bad(format!("t={t}: terminal transition before the end of the episode"));
            }
        }
        for kind in ["actor", "critic"] {
            let Some(init) = states_of(first, kind) else { continue };
            if let Some(i) = init.iter().position(|p| !p.before.is_zero()) {
                return bad(format!("agent {i}: initial {kind} state is not zero"));
            }
            for t in 0..last {
                let (a, b) = (
                    states_of(&self.transitions[t], kind).expect("checked"),
                    states_of(&self.transitions[t + 1], kind).expect("checked"),
                );
                if let Some(i) = (0..n).find(|&i| !chained(&a[i].after, &b[i].before)) {
                    return bad(format!("t={t}, agent {i}: {kind} state after step does not match next step's state"));
                }
            }
        }
        for t in 0..last {
            if self.transitions[t].next_obs != self.transitions[t + 1].obs {
                return bad(format!("t={t}: next observation does not match the following transition"));
            }
        }
        Ok(())
    }
}
