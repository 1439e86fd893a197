use ndarray::{s, Array1, Array2};

use crate::agents::VariantSpec;
use crate::env::{ACTION_DIM, OBS_DIM};
use crate::nnet::{BatchState, Matrix};
use crate::replay::{Episode, StatePair};
use crate::{Error, Result};

/// Sampled episodes laid out for batched unrolling.
///
/// Per-timestep tensors have one row per episode. "Stacked" tensors put all
/// `T·B` transitions in one matrix (row `t·B + b`) for the single-step
/// target computations.
#[derive(Debug, Clone)]
pub struct EpisodeBatch {
    pub steps: usize,
    pub batch: usize,
    pub n_agents: usize,
    /// `[agent][t]`, `(B, OBS_DIM)`.
    pub obs: Vec<Vec<Matrix>>,
    /// `[agent][t]`, `(B, ACTION_DIM)`.
    pub actions: Vec<Vec<Matrix>>,
    /// `[t]`, `(B)`.
    pub rewards: Vec<Array1<f64>>,
    /// `[t]`, 1.0 where the transition ends the episode.
    pub terminal: Vec<Array1<f64>>,
    /// `[agent]`, `(T·B, OBS_DIM)`.
    pub next_obs_stacked: Vec<Matrix>,
    /// `[agent]` actor states after each transition, `(T·B, H)`.
    pub next_actor_states: Option<Vec<BatchState>>,
    /// `[agent]` critic states after each transition, `(T·B, H)`.
    pub next_critic_states: Option<Vec<BatchState>>,
}

fn stack_states(
    episodes: &[&Episode],
    steps: usize,
    agent: usize,
    pick: impl Fn(&crate::replay::Transition) -> Option<&Vec<StatePair>>,
) -> Option<BatchState> {
    let width = pick(&episodes[0].transitions[0])?[agent].after.width();
    let batch = episodes.len();
    let mut out = BatchState::zeros(steps * batch, width);
    for t in 0..steps {
        for (b, ep) in episodes.iter().enumerate() {
            let st = &pick(&ep.transitions[t]).expect("presence validated on push")[agent].after;
            let r = t * batch + b;
            out.hidden.row_mut(r).assign(&ndarray::aview1(&st.hidden));
            out.cell.row_mut(r).assign(&ndarray::aview1(&st.cell));
        }
    }
    Some(out)
}

impl EpisodeBatch {
    /// All episodes must share one length and agent count.
    pub fn from_episodes(episodes: &[&Episode], spec: VariantSpec) -> Result<Self> {
        let Some(first) = episodes.first() else {
            return Err(Error::Config("empty batch".into()));
        };
        let steps = first.len();
        let n = first.n_agents();
        for ep in episodes {
            if ep.len() != steps || ep.n_agents() != n {
                return Err(Error::InvalidEpisode(format!(
                    "ragged batch: episode of {}x{} among {steps}x{n}",
                    ep.len(),
                    ep.n_agents()
                )));
            }
            ep.validate(spec)?;
        }
        let batch = episodes.len();
        let mut obs = vec![Vec::with_capacity(steps); n];
        let mut actions = vec![Vec::with_capacity(steps); n];
        let mut next_obs_stacked = vec![Array2::zeros((steps * batch, OBS_DIM)); n];
        let mut rewards = Vec::with_capacity(steps);
        let mut terminal = Vec::with_capacity(steps);
        for t in 0..steps {
            for i in 0..n {
                let mut o = Array2::zeros((batch, OBS_DIM));
                let mut a = Array2::zeros((batch, ACTION_DIM));
                for (b, ep) in episodes.iter().enumerate() {
                    let tr = &ep.transitions[t];
                    o.row_mut(b).assign(&ndarray::aview1(&tr.obs[i]));
                    a.row_mut(b).assign(&ndarray::aview1(&tr.actions[i]));
                    next_obs_stacked[i]
                        .slice_mut(s![t * batch + b, ..])
                        .assign(&ndarray::aview1(&tr.next_obs[i]));
                }
                obs[i].push(o);
                actions[i].push(a);
            }
            rewards.push(episodes.iter().map(|ep| ep.transitions[t].reward).collect());
            terminal.push(
                episodes
                    .iter()
                    .map(|ep| if ep.transitions[t].terminal { 1.0 } else { 0.0 })
                    .collect(),
            );
        }
        let next_actor_states = spec.actor_recurrent.then(|| {
            (0..n)
                .map(|i| stack_states(episodes, steps, i, |tr| tr.actor_states.as_ref()).expect("present"))
                .collect()
        });
        let next_critic_states = spec.critic_recurrent.then(|| {
            (0..n)
                .map(|i| stack_states(episodes, steps, i, |tr| tr.critic_states.as_ref()).expect("present"))
                .collect()
        });
        Ok(Self {
            steps,
            batch,
            n_agents: n,
            obs,
            actions,
            rewards,
            terminal,
            next_obs_stacked,
            next_actor_states,
            next_critic_states,
        })
    }

    pub fn rows(&self) -> usize {
        self.steps * self.batch
    }

    /// `[o_1 … o_N, a_1 … a_N]` at timestep `t`, with agent `replace.0`'s
    /// action swapped for `replace.1` when given.
    pub fn critic_input(&self, t: usize, replace: Option<(usize, &Matrix)>) -> Matrix {
        let n = self.n_agents;
        let mut x = Array2::zeros((self.batch, n * (OBS_DIM + ACTION_DIM)));
        for i in 0..n {
            x.slice_mut(s![.., i * OBS_DIM..(i + 1) * OBS_DIM]).assign(&self.obs[i][t]);
            let a = match replace {
                Some((j, m)) if j == i => m,
                _ => &self.actions[i][t],
            };
            let off = n * OBS_DIM + i * ACTION_DIM;
            x.slice_mut(s![.., off..off + ACTION_DIM]).assign(a);
        }
        x
    }

    /// Stacked target-critic input from per-agent next observations and
    /// target actions.
    pub fn next_critic_input(&self, target_actions: &[Matrix]) -> Matrix {
        let n = self.n_agents;
        let mut x = Array2::zeros((self.rows(), n * (OBS_DIM + ACTION_DIM)));
        for i in 0..n {
            x.slice_mut(s![.., i * OBS_DIM..(i + 1) * OBS_DIM]).assign(&self.next_obs_stacked[i]);
            let off = n * OBS_DIM + i * ACTION_DIM;
            x.slice_mut(s![.., off..off + ACTION_DIM]).assign(&target_actions[i]);
        }
        x
    }
}
