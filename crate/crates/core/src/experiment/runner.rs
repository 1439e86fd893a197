use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{Cell, ExperimentSpec};
use crate::trainer::{train_run, MetricsRecord};
use crate::{Error, Result};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Completed,
    Aborted,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub cell: Cell,
    pub status: CellStatus,
    pub episodes: usize,
    pub updates: u64,
    pub divergent_updates: u64,
    pub error: Option<String>,
    pub metrics: PathBuf,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellResult>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn all_completed(&self) -> bool {
        self.cells.iter().all(|c| c.status == CellStatus::Completed)
    }
}

/// Line-delimited metrics sink; every record is flushed as written so an
/// interrupted run leaves a readable prefix.
pub struct MetricsWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl MetricsWriter {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            out: BufWriter::new(file),
            path,
        })
    }

    pub fn write(&mut self, record: &MetricsRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n").map_err(|e| Error::io(&self.path, e))?;
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

fn run_cell(cell: &Cell, root: &Path) -> CellResult {
    let dir = root.join(&cell.run_id);
    let metrics = dir.join(METRICS_FILE);
    let mut result = CellResult {
        cell: cell.clone(),
        status: CellStatus::Failed,
        episodes: 0,
        updates: 0,
        divergent_updates: 0,
        error: None,
        metrics: metrics.clone(),
        checkpoint: None,
    };
    let outcome = (|| -> Result<_> {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut writer = MetricsWriter::create(&metrics)?;
        let out = train_run(&cell.env, cell.variant, &cell.train, cell.seed, &mut |r| writer.write(&r))?;
        let ckpt = dir.join(CHECKPOINT_FILE);
        out.checkpoint.save(&ckpt)?;
        Ok((out, ckpt))
    })();
    match outcome {
        Ok((out, ckpt)) => {
            result.status = if out.aborted {
                CellStatus::Aborted
            } else {
                CellStatus::Completed
            };
            result.episodes = out.episodes;
            result.updates = out.updates;
            result.divergent_updates = out.divergent_updates;
            result.checkpoint = Some(ckpt);
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    result
}

/// Runs every grid cell (up to `spec.workers` at once) and writes the
/// manifest after all cells finish.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Manifest> {
    spec.validate()?;
    let root = spec.out_dir();
    fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let cells = spec.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<CellResult> = pool.install(|| cells.par_iter().map(|c| run_cell(c, &root)).collect());
    let manifest = Manifest {
        spec: spec.clone(),
        cells: results,
    };
    let path = root.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
