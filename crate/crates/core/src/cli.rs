//! Command-line front end: `train`, `sweep`, `summarize`, `rollout`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::agents::Variant;
use crate::env::Observability;
use crate::experiment::{
    emit_trajectory, read_metrics, run_experiment, summarize, write_csv, EnvOverrides, ExperimentSpec, Manifest,
    DEFAULT_BUCKET, MANIFEST_FILE, METRICS_FILE, OUT_ENV,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "rmaddpg", version, about = "Recurrent multi-agent actor-critic experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one variant on one seed.
    Train(TrainArgs),
    /// Run an experiment grid from a spec file or preset.
    Sweep(SweepArgs),
    /// Aggregate metrics across seeds into a CSV table.
    Summarize(SummarizeArgs),
    /// Dump one greedy episode of a checkpoint as JSON lines.
    Rollout(RolloutArgs),
}

/// Flags shared by `train` and `sweep`; each overrides the spec file.
#[derive(Debug, Args, Default)]
pub struct GridFlags {
    /// Experiment spec (TOML).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub eval_period: Option<usize>,
    /// Episodes per update batch.
    #[arg(long)]
    pub batch_episodes: Option<usize>,
    /// Output root (default: $RMADDPG_OUT, else ./runs).
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value = "rmaddpg")]
    pub variant: Variant,
    #[arg(long, default_value = "partial")]
    pub observability: Observability,
    #[arg(long, default_value_t = 20)]
    pub budget: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub grid: GridFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Built-in grid: observability, baseline-budget or budget-sweep.
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub variant: Vec<Variant>,
    #[arg(long, value_delimiter = ',')]
    pub observability: Vec<Observability>,
    #[arg(long = "budget", value_delimiter = ',')]
    pub budgets: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub grid: GridFlags,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Metrics files, run directories or experiment roots with a manifest.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BUCKET)]
    pub bucket: usize,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub budget: Option<u32>,
    #[arg(long)]
    pub observability: Option<Observability>,
    #[arg(long)]
    pub out: PathBuf,
}

fn base_spec(grid: &GridFlags) -> Result<ExperimentSpec> {
    let mut spec = match &grid.spec {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    apply_grid(&mut spec, grid);
    Ok(spec)
}

fn apply_grid(spec: &mut ExperimentSpec, grid: &GridFlags) {
    if let Some(e) = grid.episodes {
        spec.episodes = e;
    }
    if let Some(p) = grid.eval_period {
        spec.eval_period = p;
    }
    if let Some(b) = grid.batch_episodes {
        spec.train.batch_episodes = b;
    }
    if let Some(out) = &grid.out {
        spec.out = Some(out.clone());
    }
}

/// The spec a `train` invocation resolves to.
pub fn train_spec(args: &TrainArgs) -> Result<ExperimentSpec> {
    let mut spec = base_spec(&args.grid)?;
    spec.variants = vec![args.variant];
    spec.observability = vec![args.observability];
    spec.budgets = vec![args.budget];
    spec.seeds = vec![args.seed];
    spec.workers = 1;
    Ok(spec)
}

/// The spec a `sweep` invocation resolves to.
pub fn sweep_spec(args: &SweepArgs) -> Result<ExperimentSpec> {
    let mut spec = match &args.preset {
        Some(name) => {
            let mut s = ExperimentSpec::preset(name)?;
            apply_grid(&mut s, &args.grid);
            s
        }
        None => base_spec(&args.grid)?,
    };
    if !args.variant.is_empty() {
        spec.variants = args.variant.clone();
    }
    if !args.observability.is_empty() {
        spec.observability = args.observability.clone();
    }
    if !args.budgets.is_empty() {
        spec.budgets = args.budgets.clone();
    }
    if !args.seeds.is_empty() {
        spec.seeds = args.seeds.clone();
    }
    if let Some(w) = args.workers {
        spec.workers = w;
    }
    Ok(spec)
}

fn metrics_files(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let manifest = input.join(MANIFEST_FILE);
    if manifest.is_file() {
        return Ok(Manifest::load(manifest)?.cells.into_iter().map(|c| c.metrics).collect());
    }
    let direct = input.join(METRICS_FILE);
    if direct.is_file() {
        return Ok(vec![direct]);
    }
    let mut found: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| Error::io(input, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path().join(METRICS_FILE)))
        .filter(|p| p.is_file())
        .collect();
    found.sort();
    Ok(found)
}

fn report_manifest(manifest: &Manifest, out: &mut dyn Write) -> Result<i32> {
    for c in &manifest.cells {
        let line = match &c.error {
            Some(e) => format!("{:<32} {:?}: {e}", c.cell.run_id, c.status),
            None => format!(
                "{:<32} {:?} episodes={} updates={} divergent={}",
                c.cell.run_id, c.status, c.episodes, c.updates, c.divergent_updates
            ),
        };
        writeln!(out, "{line}").map_err(|e| Error::io("stdout", e))?;
    }
    Ok(if manifest.all_completed() { 0 } else { 2 })
}

/// Runs a parsed command, writing progress to `out`. Returns the process
/// exit status: 0 on success, 2 if any grid cell failed or aborted.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Train(args) => report_manifest(&run_experiment(&train_spec(&args)?)?, out),
        Command::Sweep(args) => report_manifest(&run_experiment(&sweep_spec(&args)?)?, out),
        Command::Summarize(args) => {
            let mut records = Vec::new();
            for input in &args.inputs {
                for file in metrics_files(input)? {
                    records.extend(read_metrics(file)?);
                }
            }
            let rows = summarize(&records, args.bucket)?;
            match &args.out {
                Some(path) => {
                    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
                    write_csv(file, &rows)?;
                }
                None => write_csv(&mut *out, &rows)?,
            }
            Ok(0)
        }
        Command::Rollout(args) => {
            let overrides = EnvOverrides {
                budget_messages: args.budget,
                observability: args.observability,
            };
            let records = emit_trajectory(&args.checkpoint, args.seed, overrides, &args.out)?;
            let delivered: usize = records.iter().map(|r| r.delivered.iter().filter(|&&d| d).count()).sum();
            writeln!(
                out,
                "{} steps, {delivered} messages delivered -> {}",
                records.len(),
                args.out.display()
            )
            .map_err(|e| Error::io("stdout", e))?;
            Ok(0)
        }
    }
}
