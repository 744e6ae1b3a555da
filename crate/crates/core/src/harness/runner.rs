use std::collections::BTreeSet;
use std::path::PathBuf;

use rayon::prelude::*;

use super::output::{lag_rank, OutputSet};
use super::{HarnessError, ScenarioSpec};
use crate::domain::Event;
use crate::exec::{Engine, ExecConfig};
use crate::metrics::{summarize, PerRunRow, RunResult, SummaryRow};
use crate::sim::MachineInterval;

/// A finished replication with its scored result and execution diagnostics.
#[derive(Debug, Clone)]
pub struct Replication {
    pub result: RunResult,
    pub trace: Vec<Event>,
    pub occupancy: Vec<MachineInterval>,
    pub latches: u64,
    pub aborts: u64,
    pub max_retries: u32,
}

pub fn run_replication_detailed(spec: &ScenarioSpec, rep: u64) -> Result<Replication, HarnessError> {
    let sim = spec.sim_config(rep);
    let seed = sim.seed;
    let horizon = sim.horizon;
    let warmup_cutoff = sim.warmup_cutoff();
    let exec = ExecConfig {
        max_reisolations: spec.max_reisolations,
        ..ExecConfig::new(spec.arch)
    };
    let wrap = |source| HarnessError::Replication {
        seed,
        rep,
        lag: spec.lag.label(),
        arch: spec.arch,
        policy: spec.policy,
        source,
    };
    let outcome = Engine::new(sim, exec, &spec.policy)
        .and_then(Engine::run)
        .map_err(wrap)?;
    Ok(Replication {
        result: RunResult {
            seed,
            rep,
            lag: spec.lag.label(),
            policy: spec.policy,
            arch: spec.arch,
            horizon,
            warmup_cutoff,
            records: outcome.records,
            completed_jobs: outcome.completed_jobs,
            generated: outcome.generated,
            incomplete: outcome.incomplete,
        },
        trace: outcome.trace,
        occupancy: outcome.occupancy,
        latches: outcome.latches,
        aborts: outcome.aborts,
        max_retries: outcome.max_retries,
    })
}

/// Runs replication `rep` of `spec`. Deterministic in `(spec, rep)`.
pub fn run_replication(spec: &ScenarioSpec, rep: u64) -> Result<RunResult, HarnessError> {
    run_replication_detailed(spec, rep).map(|r| r.result)
}

/// Where and what a sweep writes.
#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Output directory; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    pub divergence_logs: bool,
    pub traces: bool,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    /// Per-run rows in output order.
    pub rows: Vec<PerRunRow>,
    pub summary: Vec<SummaryRow>,
    /// Full results in the same order as `rows`.
    pub results: Vec<RunResult>,
}

/// Runs every replication of every scenario in parallel, then writes the
/// outputs sorted by (lag, arch, policy, rep).
pub fn run_sweep(grid: &[ScenarioSpec], options: &SweepOptions) -> Result<SweepReport, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let mut cells = BTreeSet::new();
    for spec in grid {
        spec.validate()?;
        for rep in 0..spec.replications {
            let key = (spec.lag.label(), spec.arch, spec.policy, rep);
            if !cells.insert(key.clone()) {
                return Err(HarnessError::DuplicateCell(format!(
                    "{}/{}/{}/rep {}",
                    key.0, key.1, key.2, key.3
                )));
            }
        }
    }

    let tasks: Vec<(&ScenarioSpec, u64)> = grid
        .iter()
        .flat_map(|spec| (0..spec.replications).map(move |rep| (spec, rep)))
        .collect();
    let keep_trace = options.traces;
    let outcomes: Vec<Result<Replication, HarnessError>> = tasks
        .par_iter()
        .map(|&(spec, rep)| {
            run_replication_detailed(spec, rep).map(|mut r| {
                if !keep_trace {
                    r.trace = Vec::new();
                }
                r.occupancy = Vec::new();
                r
            })
        })
        .collect();
    let mut runs = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    runs.sort_by(|a, b| {
        let (a, b) = (&a.result, &b.result);
        (lag_rank(&a.lag), &a.lag, a.arch, a.policy, a.rep).cmp(&(lag_rank(&b.lag), &b.lag, b.arch, b.policy, b.rep))
    });

    let rows: Vec<PerRunRow> = runs.iter().map(|r| PerRunRow::from_result(&r.result)).collect();
    let summary = summarize(&rows);
    if let Some(dir) = &options.out_dir {
        let mut out = OutputSet::new(dir.clone())?;
        let written = out
            .per_run(&rows)
            .and_then(|_| out.summary(&summary))
            .and_then(|_| {
                if options.divergence_logs {
                    for r in &runs {
                        out.divergence_log(&r.result)?;
                    }
                }
                if options.traces {
                    for r in &runs {
                        out.trace(&r.result, &r.trace)?;
                    }
                }
                Ok(())
            });
        match written {
            Ok(()) => out.commit()?,
            Err(e) => {
                out.abort();
                return Err(e);
            }
        }
    }
    Ok(SweepReport {
        rows,
        summary,
        results: runs.into_iter().map(|r| r.result).collect(),
    })
}
