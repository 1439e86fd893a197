//! Buffer snapshots in the named-array container format.
//!
//! Per stored episode `k` (length `T`, `N` agents, state width `H`):
//! `ep{k}/obs`, `ep{k}/next_obs` `(T, N·7)`; `ep{k}/actions` `(T, N·7)`;
//! `ep{k}/reward`, `ep{k}/terminal` `(T)`; and for recurrent networks the
//! chained states `ep{k}/{actor,critic}_{hidden,cell}` `(T+1, N, H)`.

use std::path::Path;
use std::sync::Arc;

use super::{Episode, EpisodeMeta, ReplayBuffer, StatePair, Transition};
use crate::agents::VariantSpec;
use crate::env::{ACTION_DIM, OBS_DIM};
use crate::nnet::container::Container;
use crate::nnet::NamedTensor;
use crate::nnet::RecurrentState;
use crate::{Error, Result};

const KIND: &str = "rmaddpg-replay";

fn tensor(name: String, shape: Vec<usize>, values: Vec<f64>) -> NamedTensor {
    NamedTensor { name, shape, values }
}

fn chain_of(ep: &Episode, pick: impl Fn(&Transition) -> Option<&Vec<StatePair>>) -> Option<Vec<Vec<Arc<RecurrentState>>>> {
    let first = pick(&ep.transitions[0])?;
    let mut chain = vec![first.iter().map(|p| p.before.clone()).collect::<Vec<_>>()];
    for tr in &ep.transitions {
        chain.push(pick(tr).expect("validated").iter().map(|p| p.after.clone()).collect());
    }
    Some(chain)
}

impl ReplayBuffer {
    pub fn to_container(&self) -> Container {
        let mut c = Container::new();
        c.set_meta("kind", KIND);
        c.set_meta("capacity", self.capacity());
        c.set_meta("inserted", self.inserted());
        c.set_meta("actor_recurrent", self.spec().actor_recurrent);
        c.set_meta("critic_recurrent", self.spec().critic_recurrent);
        c.set_meta("episodes", self.num_episodes());
        for (k, ep) in self.episodes().enumerate() {
            let t_len = ep.len();
            let n = ep.n_agents();
            c.set_meta(format!("ep{k}.seed"), ep.meta.seed);
            c.set_meta(format!("ep{k}.index"), ep.meta.index);
            let flat_obs = |f: &dyn Fn(&Transition) -> &Vec<[f64; OBS_DIM]>| {
                ep.transitions.iter().flat_map(|tr| f(tr).iter().flatten().copied()).collect::<Vec<f64>>()
            };
            let mut push = |t: NamedTensor| c.push_tensor(t).expect("unique names");
            push(tensor(format!("ep{k}/obs"), vec![t_len, n * OBS_DIM], flat_obs(&|tr| &tr.obs)));
            push(tensor(format!("ep{k}/next_obs"), vec![t_len, n * OBS_DIM], flat_obs(&|tr| &tr.next_obs)));
            push(tensor(
                format!("ep{k}/actions"),
                vec![t_len, n * ACTION_DIM],
                ep.transitions.iter().flat_map(|tr| tr.actions.iter().flatten().copied()).collect(),
            ));
            push(tensor(format!("ep{k}/reward"), vec![t_len], ep.transitions.iter().map(|tr| tr.reward).collect()));
            push(tensor(
                format!("ep{k}/terminal"),
                vec![t_len],
                ep.transitions.iter().map(|tr| if tr.terminal { 1.0 } else { 0.0 }).collect(),
            ));
            let chains = [
                ("actor", chain_of(ep, |tr| tr.actor_states.as_ref())),
                ("critic", chain_of(ep, |tr| tr.critic_states.as_ref())),
            ];
            for (kind, chain) in chains {
                let Some(chain) = chain else { continue };
                let h = chain[0][0].width();
                let hidden = chain.iter().flatten().flat_map(|s| s.hidden.iter().copied()).collect();
                let cell = chain.iter().flatten().flat_map(|s| s.cell.iter().copied()).collect();
                push(tensor(format!("ep{k}/{kind}_hidden"), vec![t_len + 1, n, h], hidden));
                push(tensor(format!("ep{k}/{kind}_cell"), vec![t_len + 1, n, h], cell));
            }
        }
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        if c.meta("kind")? != KIND {
            return Err(Error::Format("not a replay snapshot".into()));
        }
        let parse = |k: &str| -> Result<u64> {
            c.meta(k)?.parse().map_err(|_| Error::Format(format!("metadata {k:?} is not an integer")))
        };
        let flag = |k: &str| -> Result<bool> {
            c.meta(k)?.parse().map_err(|_| Error::Format(format!("metadata {k:?} is not a bool")))
        };
        let spec = VariantSpec {
            actor_recurrent: flag("actor_recurrent")?,
            critic_recurrent: flag("critic_recurrent")?,
        };
        let mut episodes = Vec::new();
        for k in 0..parse("episodes")? {
            let obs = c.tensor(&format!("ep{k}/obs"))?;
            let (t_len, width) = match obs.shape[..] {
                [t, w] if w % OBS_DIM == 0 && w > 0 => (t, w),
                _ => return Err(Error::Format(format!("ep{k}/obs has shape {:?}", obs.shape))),
            };
            let n = width / OBS_DIM;
            let next_obs = c.tensor(&format!("ep{k}/next_obs"))?;
            let actions = c.tensor(&format!("ep{k}/actions"))?;
            let reward = c.tensor(&format!("ep{k}/reward"))?;
            let terminal = c.tensor(&format!("ep{k}/terminal"))?;
            if next_obs.shape != obs.shape
                || actions.shape != [t_len, n * ACTION_DIM]
                || reward.shape != [t_len]
                || terminal.shape != [t_len]
            {
                return Err(Error::Format(format!("ep{k}: inconsistent tensor shapes")));
            }
            let states = |kind: &str, present: bool| -> Result<Option<Vec<Vec<Arc<RecurrentState>>>>> {
                if !present {
                    return Ok(None);
                }
                let hid = c.tensor(&format!("ep{k}/{kind}_hidden"))?;
                let cel = c.tensor(&format!("ep{k}/{kind}_cell"))?;
                let h = match hid.shape[..] {
                    [t1, nn, h] if t1 == t_len + 1 && nn == n && cel.shape == hid.shape => h,
                    _ => return Err(Error::Format(format!("ep{k}/{kind} states have shape {:?}", hid.shape))),
                };
                Ok(Some(
                    (0..=t_len)
                        .map(|t| {
                            (0..n)
                                .map(|i| {
                                    let off = (t * n + i) * h;
                                    Arc::new(RecurrentState {
                                        hidden: hid.values[off..off + h].to_vec(),
                                        cell: cel.values[off..off + h].to_vec(),
                                    })
                                })
                                .collect()
                        })
                        .collect(),
                ))
            };
            let actor = states("actor", spec.actor_recurrent)?;
            let critic = states("critic", spec.critic_recurrent)?;
            let pairs = |chain: &Option<Vec<Vec<Arc<RecurrentState>>>>, t: usize| {
                chain.as_ref().map(|ch| {
                    (0..n)
                        .map(|i| StatePair {
                            before: ch[t][i].clone(),
                            after: ch[t + 1][i].clone(),
                        })
                        .collect()
                })
            };
            let rows = |v: &[f64], t: usize| -> Vec<[f64; OBS_DIM]> {
                (0..n)
                    .map(|i| v[(t * n + i) * OBS_DIM..(t * n + i + 1) * OBS_DIM].try_into().expect("obs"))
                    .collect()
            };
            let transitions = (0..t_len)
                .map(|t| Transition {
                    obs: rows(&obs.values, t),
                    actions: (0..n)
                        .map(|i| {
                            actions.values[(t * n + i) * ACTION_DIM..(t * n + i + 1) * ACTION_DIM]
                                .try_into()
                                .expect("action")
                        })
                        .collect(),
                    next_obs: rows(&next_obs.values, t),
                    reward: reward.values[t],
                    actor_states: pairs(&actor, t),
                    critic_states: pairs(&critic, t),
                    terminal: terminal.values[t] != 0.0,
                })
                .collect();
            episodes.push(Episode::new(
                transitions,
                EpisodeMeta {
                    seed: parse(&format!("ep{k}.seed"))?,
                    index: parse(&format!("ep{k}.index"))?,
                },
            ));
        }
        ReplayBuffer::restore(spec, parse("capacity")? as usize, parse("inserted")?, episodes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_container().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_container(&Container::load(path)?)
    }
}
