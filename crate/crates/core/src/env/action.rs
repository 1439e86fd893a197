use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PHYSICAL_ACTIONS: usize = 5;
pub const VERBAL_ACTIONS: usize = 2;
/// Length of the concatenated physical + verbal one-hot.
pub const ACTION_DIM: usize = PHYSICAL_ACTIONS + VERBAL_ACTIONS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Physical {
    None,
    North,
    East,
    West,
    South,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verbal {
    Communicate,
    Silent,
}

impl Physical {
    pub const ALL: [Physical; PHYSICAL_ACTIONS] = [
        Physical::None,
        Physical::North,
        Physical::East,
        Physical::West,
        Physical::South,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Config(format!("physical action index {i} out of range")))
    }

    /// Unit displacement; north is +y, east is +x.
    pub fn direction(self) -> [f64; 2] {
        match self {
            Physical::None => [0.0, 0.0],
            Physical::North => [0.0, 1.0],
            Physical::East => [1.0, 0.0],
            Physical::West => [-1.0, 0.0],
            Physical::South => [0.0, -1.0],
        }
    }
}

impl Verbal {
    pub const ALL: [Verbal; VERBAL_ACTIONS] = [Verbal::Communicate, Verbal::Silent];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Config(format!("verbal action index {i} out of range")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentAction {
    pub physical: Physical,
    pub verbal: Verbal,
}

impl AgentAction {
    pub fn new(physical: Physical, verbal: Verbal) -> Self {
        Self { physical, verbal }
    }

    /// `[physical one-hot (5) | verbal one-hot (2)]`.
    pub fn one_hot(self) -> [f64; ACTION_DIM] {
        let mut v = [0.0; ACTION_DIM];
        v[self.physical.index()] = 1.0;
        v[PHYSICAL_ACTIONS + self.verbal.index()] = 1.0;
        v
    }

    pub fn from_one_hot(v: &[f64]) -> Result<Self> {
        if v.len() != ACTION_DIM {
            return Err(Error::shape("action one-hot", ACTION_DIM, v.len()));
        }
        let hot = |s: &[f64]| -> Result<usize> {
            let ones: Vec<usize> = s.iter().enumerate().filter(|(_, &x)| x == 1.0).map(|(i, _)| i).collect();
            if ones.len() == 1 && s.iter().all(|&x| x == 0.0 || x == 1.0) {
                Ok(ones[0])
            } else {
                Err(Error::Config(format!("not a one-hot vector: {s:?}")))
            }
        };
        Ok(Self {
            physical: Physical::from_index(hot(&v[..PHYSICAL_ACTIONS])?)?,
            verbal: Verbal::from_index(hot(&v[PHYSICAL_ACTIONS..])?)?,
        })
    }
}
