use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::Variant;
use crate::env::{EnvConfig, Observability};
use crate::trainer::{run_id, TrainConfig};
use crate::{Error, Result};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "RMADDPG_OUT";
pub const DEFAULT_OUT: &str = "runs";
pub const DEFAULT_BUCKET: usize = 100;

/// Experiment grid: every `observability × variant × budget × seed` cell
/// is one training run.
///
/// ```toml
/// variants = ["maddpg", "rmaddpg"]
/// observability = ["full", "partial"]
/// budgets = [20]
/// seeds = [0, 1, 2, 3]
/// episodes = 2000
/// eval_period = 50
/// out = "runs/observability"
/// workers = 2
/// bucket = 100
///
/// [train]
/// batch_episodes = 64
///
/// [env]
/// episode_length = 100
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub variants: Vec<Variant>,
    #[serde(default = "default_observability")]
    pub observability: Vec<Observability>,
    #[serde(default = "default_budgets")]
    pub budgets: Vec<u32>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_eval_period")]
    pub eval_period: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Episode-bucket width used by `summarize`.
    #[serde(default = "default_bucket")]
    pub bucket: usize,
    /// Overrides on top of the training defaults; `total_episodes` and
    /// `eval_period` are taken from the fields above.
    #[serde(default)]
    pub train: TrainConfig,
    /// Base environment; `observability` and `budget_messages` are set per cell.
    #[serde(default)]
    pub env: EnvConfig,
}

fn default_observability() -> Vec<Observability> {
    vec![Observability::Partial]
}
fn default_budgets() -> Vec<u32> {
    vec![20]
}
fn default_episodes() -> usize {
    2000
}
fn default_eval_period() -> usize {
    50
}
fn default_workers() -> usize {
    1
}
fn default_bucket() -> usize {
    DEFAULT_BUCKET
}

/// One resolved grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub run_id: String,
    pub variant: Variant,
    pub seed: u64,
    pub env: EnvConfig,
    pub train: TrainConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            observability: default_observability(),
            budgets: default_budgets(),
            seeds: vec![0, 1, 2, 3],
            episodes: default_episodes(),
            eval_period: default_eval_period(),
            out: None,
            workers: default_workers(),
            bucket: default_bucket(),
            train: TrainConfig::default(),
            env: EnvConfig::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("experiment spec: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// Named grids: `observability` (full and partial × all variants at
    /// budget 20), `baseline-budget` (MADDPG against R-MADDPG over budgets),
    /// `budget-sweep` (R-MADDPG over budgets).
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        Ok(match name {
            "observability" => Self {
                observability: vec![Observability::Full, Observability::Partial],
                ..base
            },
            "baseline-budget" => Self {
                variants: vec![Variant::Maddpg, Variant::Rmaddpg],
                budgets: vec![20, 50, 100, 200],
                ..base
            },
            "budget-sweep" => Self {
                variants: vec![Variant::Rmaddpg],
                budgets: vec![0, 10, 20, 50, 100, 200],
                ..base
            },
            other => return Err(Error::Config(format!("unknown preset {other:?} (observability, baseline-budget, budget-sweep)"))),
        })
    }

    /// `out`, else `$RMADDPG_OUT`, else `runs`.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config("variant list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.observability.is_empty() {
            return Err(Error::Config("observability list is empty".into()));
        }
        if self.budgets.is_empty() {
            return Err(Error::Config("budget list is empty".into()));
        }
        if self.workers == 0 || self.bucket == 0 {
            return Err(Error::Config("workers and bucket must be positive".into()));
        }
        for cell in self.cells() {
            cell.env.validate()?;
            cell.train.validate()?;
        }
        let mut ids: Vec<String> = self.cells().into_iter().map(|c| c.run_id).collect();
        let total = ids.len();
        ids.sort();
        ids.dedup();
        if ids.len() != total {
            return Err(Error::Config("grid lists contain duplicates".into()));
        }
        Ok(())
    }

    /// Grid cells in a fixed order: observability, variant, budget, seed.
    pub fn cells(&self) -> Vec<Cell> {
        let mut train = self.train.clone();
        train.total_episodes = self.episodes;
        train.eval_period = self.eval_period;
        let mut cells = Vec::new();
        for &obs in &self.observability {
            for &variant in &self.variants {
                for &budget in &self.budgets {
                    for &seed in &self.seeds {
                        let env = EnvConfig {
                            observability: obs,
                            budget_messages: budget,
                            ..self.env.clone()
                        };
                        cells.push(Cell {
                            run_id: run_id(obs, variant, budget, seed),
                            variant,
                            seed,
                            env,
                            train: train.clone(),
                        });
                    }
                }
            }
        }
        cells
    }
}
