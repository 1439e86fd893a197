use std::collections::VecDeque;

use rand::Rng;

use super::Episode;
use crate::agents::VariantSpec;
use crate::{Error, Result};

/// Capacity in transitions.
pub const DEFAULT_CAPACITY: usize = 1_000_000;

/// FIFO ring of whole episodes, bounded by total stored transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    spec: VariantSpec,
    capacity: usize,
    episodes: VecDeque<Episode>,
    stored: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(spec: VariantSpec, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(Self {
            spec,
            capacity,
            episodes: VecDeque::new(),
            stored: 0,
            inserted: 0,
        })
    }

    pub fn spec(&self) -> VariantSpec {
        self.spec
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.stored
    }

    /// Episodes ever accepted, including evicted ones.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn episodes(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.iter()
    }

    /// Validates and appends `ep`, evicting the oldest episodes until the
    /// transition count fits.
    pub fn push_episode(&mut self, ep: Episode) -> Result<()> {
        ep.validate(self.spec)?;
        if let Some(existing) = self.episodes.front() {
            if existing.n_agents() != ep.n_agents() {
                return Err(Error::InvalidEpisode(format!(
                    "episode has {} agents, buffer holds {}",
                    ep.n_agents(),
                    existing.n_agents()
                )));
            }
        }
        if ep.len() > self.capacity {
            return Err(Error::InvalidEpisode(format!(
                "episode of {} transitions exceeds capacity {}",
                ep.len(),
                self.capacity
            )));
        }
        self.stored += ep.len();
        self.episodes.push_back(ep);
        self.inserted += 1;
        while self.stored > self.capacity {
            let old = self.episodes.pop_front().expect("stored > 0 implies an episode");
            self.stored -= old.len();
        }
        Ok(())
    }

    /// Uniform draw of `batch` episodes with replacement.
    pub fn sample_batch<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Episode>> {
        if self.episodes.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        if batch == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let n = self.episodes.len();
        Ok((0..batch).map(|_| &self.episodes[rng.gen_range(0..n)]).collect())
    }

    pub(crate) fn restore(spec: VariantSpec, capacity: usize, inserted: u64, episodes: Vec<Episode>) -> Result<Self> {
        let mut buf = Self::new(spec, capacity)?;
        for ep in episodes {
            buf.push_episode(ep)?;
        }
        buf.inserted = inserted;
        Ok(buf)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::replay::{EpisodeMeta, StatePair, Transition};
    use crate::nnet::RecurrentState;

    const RNN: VariantSpec = VariantSpec {
        actor_recurrent: true,
        critic_recurrent: true,
    };

    /// Chained synthetic episode of `len` steps for two agents; `tag`
    /// fills the observations so episodes can be told apart.
    pub(crate) fn synthetic(len: usize, tag: f64, spec: VariantSpec) -> Episode {
        let width = 3;
        let chain = |scale: f64| -> Vec<Arc<RecurrentState>> {
            (0..=len)
                .map(|t| {
                    let v = if t == 0 { 0.0 } else { scale * t as f64 };
                    Arc::new(RecurrentState {
                        hidden: vec![v; width],
                        cell: vec![-v; width],
                    })
                })
                .collect()
        };
        let (a, c) = (chain(0.1), chain(0.2));
        let obs = |t: usize| vec![[tag + t as f64; 7]; 2];
        let pairs = |ch: &[Arc<RecurrentState>], t: usize| {
            vec![
                StatePair {
                    before: ch[t].clone(),
                    after: ch[t + 1].clone(),
                };
                2
            ]
        };
        let transitions = (0..len)
            .map(|t| Transition {
                obs: obs(t),
                actions: vec![[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]; 2],
                next_obs: obs(t + 1),
                reward: -(t as f64),
                actor_states: spec.actor_recurrent.then(|| pairs(&a, t)),
                critic_states: spec.critic_recurrent.then(|| pairs(&c, t)),
                terminal: t + 1 == len,
            })
            .collect();
        Episode::new(transitions, EpisodeMeta { seed: tag as u64, index: 0 })
    }

    #[test]
    fn capacity_evicts_oldest_episodes_first() {
        let mut buf = ReplayBuffer::new(RNN, 200).unwrap();
        for k in 0..3 {
            buf.push_episode(synthetic(100, k as f64, RNN)).unwrap();
        }
        assert_eq!(buf.num_episodes(), 2);
        assert_eq!(buf.num_transitions(), 200);
        assert_eq!(buf.inserted(), 3);
        let tags: Vec<u64> = buf.episodes().map(|e| e.meta.seed).collect();
        assert_eq!(tags, vec![1, 2]);
    }

    #[test]
    fn broken_chain_is_rejected() {
        let mut ep = synthetic(5, 0.0, RNN);
        let states = ep.transitions[3].actor_states.as_mut().unwrap();
        states[1].before = Arc::new(RecurrentState {
            hidden: vec![9.0; 3],
            cell: vec![9.0; 3],
        });
        let mut buf = ReplayBuffer::new(RNN, 100).unwrap();
        assert!(matches!(buf.push_episode(ep), Err(Error::InvalidEpisode(_))));
        assert!(buf.is_empty());
    }

    #[test]
    fn nonzero_initial_state_is_rejected() {
        let mut ep = synthetic(3, 0.0, RNN);
        ep.transitions[0].critic_states.as_mut().unwrap()[0].before = Arc::new(RecurrentState {
            hidden: vec![0.5; 3],
            cell: vec![0.0; 3],
        });
        assert!(ep.validate(RNN).is_err());
    }

    #[test]
    fn states_must_match_the_variant() {
        let ff = VariantSpec {
            actor_recurrent: false,
            critic_recurrent: false,
        };
        let mut buf = ReplayBuffer::new(ff, 100).unwrap();
        assert!(buf.push_episode(synthetic(3, 0.0, RNN)).is_err());
        buf.push_episode(synthetic(3, 0.0, ff)).unwrap();
    }

    #[test]
    fn empty_and_oversized_episodes_are_rejected() {
        let mut buf = ReplayBuffer::new(RNN, 10).unwrap();
        assert!(buf.push_episode(Episode::new(vec![], EpisodeMeta::default())).is_err());
        assert!(buf.push_episode(synthetic(11, 0.0, RNN)).is_err());
        assert!(ReplayBuffer::new(RNN, 0).is_err());
    }

    #[test]
    fn sampling_a_single_episode_repeats_it() {
        let mut buf = ReplayBuffer::new(RNN, 100).unwrap();
        buf.push_episode(synthetic(4, 7.0, RNN)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = buf.sample_batch(4, &mut rng).unwrap();
        assert_eq!(batch.len(), 4);
        assert!(batch.iter().all(|e| e.meta.seed == 7));
    }

    #[test]
    fn sampling_an_empty_buffer_fails() {
        let buf = ReplayBuffer::new(RNN, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(buf.sample_batch(1, &mut rng), Err(Error::EmptyBuffer)));
    }

    #[test]
    fn snapshot_round_trip_preserves_episodes_and_sharing() {
        let mut buf = ReplayBuffer::new(RNN, 100).unwrap();
        buf.push_episode(synthetic(4, 1.0, RNN)).unwrap();
        buf.push_episode(synthetic(6, 2.0, RNN)).unwrap();
        let back = ReplayBuffer::from_container(&buf.to_container()).unwrap();
        assert_eq!(back.num_transitions(), 10);
        for (a, b) in buf.episodes().zip(back.episodes()) {
            assert_eq!(a, b);
            let s = b.transitions[1].actor_states.as_ref().unwrap();
            let prev = b.transitions[0].actor_states.as_ref().unwrap();
            assert!(Arc::ptr_eq(&prev[0].after, &s[0].before));
        }
    }
}
