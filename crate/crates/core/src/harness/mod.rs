//! Scenario configuration, replication sweeps and result files.

mod output;
mod runner;
mod scenario;

pub use output::{format_summary, read_per_run, report, write_summary};
pub use runner::{run_replication, run_replication_detailed, run_sweep, Replication, SweepOptions, SweepReport};
pub use scenario::{default_grid, load_config, parse_config, LagSetting, ScenarioSpec};

use std::path::PathBuf;

use thiserror::Error;

use crate::domain::Architecture;
use crate::exec::ExecError;
use crate::policy::PolicyKind;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("replication failed (seed {seed}, rep {rep}, {lag}/{arch}/{policy}): {source}")]
    Replication {
        seed: u64,
        rep: u64,
        lag: String,
        arch: Architecture,
        policy: PolicyKind,
        #[source]
        source: ExecError,
    },
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("cell {0} appears more than once in the grid")]
    DuplicateCell(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}
