//! Experiment grids, the parallel runner, seed aggregation and trajectory
//! dumps.

mod rollout;
mod runner;
mod spec;
mod summary;

pub use rollout::{emit_trajectory, trajectory, EnvOverrides};
pub use runner::{
    read_metrics, run_experiment, CellResult, CellStatus, Manifest, MetricsWriter, CHECKPOINT_FILE,
    MANIFEST_FILE, METRICS_FILE,
};
pub use spec::{Cell, ExperimentSpec, DEFAULT_BUCKET, DEFAULT_OUT, OUT_ENV};
pub use summary::{mean_std, summarize, write_csv, SummaryRow};
