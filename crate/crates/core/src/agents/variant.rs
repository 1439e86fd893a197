use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariantSpec {
    pub actor_recurrent: bool,
    pub critic_recurrent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Feed-forward actor and critic.
    Maddpg,
    /// Recurrent actor, feed-forward critic.
    Ra,
    /// Feed-forward actor, recurrent critic.
    Rc,
    /// Recurrent actor and critic.
    Rmaddpg,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Maddpg, Variant::Ra, Variant::Rc, Variant::Rmaddpg];

    pub fn spec(self) -> VariantSpec {
        let (actor_recurrent, critic_recurrent) = match self {
            Variant::Maddpg => (false, false),
            Variant::Ra => (true, false),
            Variant::Rc => (false, true),
            Variant::Rmaddpg => (true, true),
        };
        VariantSpec {
            actor_recurrent,
            critic_recurrent,
        }
    }

    pub fn from_spec(spec: VariantSpec) -> Self {
        match (spec.actor_recurrent, spec.critic_recurrent) {
            (false, false) => Variant::Maddpg,
            (true, false) => Variant::Ra,
            (false, true) => Variant::Rc,
            (true, true) => Variant::Rmaddpg,
        }
    }

    pub fn actor_recurrent(self) -> bool {
        self.spec().actor_recurrent
    }

    pub fn critic_recurrent(self) -> bool {
        self.spec().critic_recurrent
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Maddpg => "maddpg",
            Variant::Ra => "ra",
            Variant::Rc => "rc",
            Variant::Rmaddpg => "rmaddpg",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?} (maddpg|ra|rc|rmaddpg)")))
    }
}
