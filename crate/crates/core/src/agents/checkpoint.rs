use std::path::Path;

use super::{ActorNet, AgentBundle, CriticNet, NetDims, StackNet, Variant};
use crate::env::EnvConfig;
use crate::nnet::container::Container;
use crate::nnet::ParameterSet;
use crate::{Error, Result};

const KIND: &str = "rmaddpg-checkpoint";
const NETS: [&str; 4] = ["actor", "critic", "target_actor", "target_critic"];

#[derive(Debug, Clone, PartialEq)]
pub struct AgentNets {
    pub actor: ParameterSet,
    pub critic: ParameterSet,
    pub target_actor: ParameterSet,
    pub target_critic: ParameterSet,
}

/// All four parameter sets per agent plus the variant and dimensions
/// needed to rebuild them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub variant: Variant,
    pub dims: NetDims,
    pub env: EnvConfig,
    pub agents: Vec<AgentNets>,
}

impl Checkpoint {
    pub fn from_bundles(variant: Variant, env: &EnvConfig, bundles: &[AgentBundle]) -> Self {
        let hidden = bundles.first().map_or(super::HIDDEN, |b| b.actor.net.hidden_dim());
        Self {
            variant,
            dims: NetDims::new(env.n_agents, hidden),
            env: env.clone(),
            agents: bundles
                .iter()
                .map(|b| AgentNets {
                    actor: b.actor.net.params().clone(),
                    critic: b.critic.net.params().clone(),
                    target_actor: b.target_actor.net.params().clone(),
                    target_critic: b.target_critic.net.params().clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds bundles with fresh optimizer state and zeroed recurrence.
    pub fn to_bundles(&self) -> Result<Vec<AgentBundle>> {
        self.agents
            .iter()
            .map(|a| {
                let net = |p: &ParameterSet| StackNet::from_params(p.clone());
                let b = AgentBundle::from_nets(
                    ActorNet { net: net(&a.actor)? },
                    CriticNet { net: net(&a.critic)? },
                    ActorNet { net: net(&a.target_actor)? },
                    CriticNet { net: net(&a.target_critic)? },
                );
                self.check_bundle(&b)?;
                Ok(b)
            })
            .collect()
    }

    fn check_bundle(&self, b: &AgentBundle) -> Result<()> {
        let spec = self.variant.spec();
        let d = self.dims;
        let ok = b.actor.net.is_recurrent() == spec.actor_recurrent
            && b.critic.net.is_recurrent() == spec.critic_recurrent
            && b.actor.net.input_dim() == d.obs_dim
            && b.actor.net.output_dim() == d.action_dim
            && b.critic.net.input_dim() == d.critic_input()
            && b.critic.net.output_dim() == 1
            && b.actor.net.hidden_dim() == d.hidden
            && b.target_actor.net.params().same_structure(b.actor.net.params())
            && b.target_critic.net.params().same_structure(b.critic.net.params());
        if ok {
            Ok(())
        } else {
            Err(Error::Incompatible(format!("networks do not match variant {} / {:?}", self.variant, d)))
        }
    }

    pub fn to_container(&self) -> Container {
        let mut c = Container::new();
        c.set_meta("kind", KIND);
        c.set_meta("variant", self.variant);
        c.set_meta("n_agents", self.dims.n_agents);
        c.set_meta("obs_dim", self.dims.obs_dim);
        c.set_meta("action_dim", self.dims.action_dim);
        c.set_meta("hidden", self.dims.hidden);
        c.set_meta("env", serde_json::to_string(&self.env).expect("env config serializes"));
        for (i, a) in self.agents.iter().enumerate() {
            for (name, set) in NETS.iter().zip([&a.actor, &a.critic, &a.target_actor, &a.target_critic]) {
                for mut t in set.named_tensors() {
                    t.name = format!("agent{i}/{name}/{}", t.name);
                    c.push_tensor(t).expect("unique names");
                }
            }
        }
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        if c.meta("kind")? != KIND {
            return Err(Error::Incompatible(format!("not a checkpoint: kind {:?}", c.meta("kind")?)));
        }
        let num = |k: &str| -> Result<usize> {
            c.meta(k)?
                .parse()
                .map_err(|_| Error::Format(format!("metadata {k:?} is not an integer")))
        };
        let variant: Variant = c.meta("variant")?.parse()?;
        let dims = NetDims {
            n_agents: num("n_agents")?,
            obs_dim: num("obs_dim")?,
            action_dim: num("action_dim")?,
            hidden: num("hidden")?,
        };
        let env: EnvConfig = serde_json::from_str(c.meta("env")?)?;
        if env.n_agents != dims.n_agents {
            return Err(Error::Incompatible("agent count disagrees with env config".into()));
        }
        let mut agents = Vec::with_capacity(dims.n_agents);
        for i in 0..dims.n_agents {
            let load = |name: &str| ParameterSet::from_named_tensors(&c.tensors_under(&format!("agent{i}/{name}")));
            agents.push(AgentNets {
                actor: load(NETS[0])?,
                critic: load(NETS[1])?,
                target_actor: load(NETS[2])?,
                target_critic: load(NETS[3])?,
            });
        }
        let ck = Self {
            variant,
            dims,
            env,
            agents,
        };
        ck.to_bundles()?;
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_container().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_container(&Container::load(path)?)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn container_round_trip_for_every_variant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let env = EnvConfig::default();
        for v in Variant::ALL {
            let bundles: Vec<_> = (0..2).map(|_| AgentBundle::new(v, NetDims::new(2, 6), &mut rng)).collect();
            let ck = Checkpoint::from_bundles(v, &env, &bundles);
            let back = Checkpoint::from_container(&Container::from_bytes(&ck.to_container().to_bytes()).unwrap()).unwrap();
            assert_eq!(back, ck);
            let rebuilt = back.to_bundles().unwrap();
            assert_eq!(rebuilt[1].actor, bundles[1].actor);
        }
    }

    #[test]
    fn variant_tag_must_match_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let env = EnvConfig::default();
        let bundles: Vec<_> = (0..2)
            .map(|_| AgentBundle::new(Variant::Maddpg, NetDims::new(2, 6), &mut rng))
            .collect();
        let mut c = Checkpoint::from_bundles(Variant::Maddpg, &env, &bundles).to_container();
        c.set_meta("variant", "rmaddpg");
        assert!(matches!(Checkpoint::from_container(&c), Err(Error::Incompatible(_))));
    }
}
