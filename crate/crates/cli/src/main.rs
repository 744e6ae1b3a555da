use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use execlayer::domain::Architecture;
use execlayer::harness::{
    default_grid, format_summary, load_config, report, run_sweep, LagSetting, ScenarioSpec, SweepOptions,
};
use execlayer::policy::PolicyKind;
use execlayer::sim::LagPreset;

#[derive(Parser)]
#[command(name = "execlayer", version, about = "Dispatch simulation with and without an execution layer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replications of a single scenario.
    Run(RunArgs),
    /// Run the full lag x architecture x policy grid.
    Sweep(RunArgs),
    /// Re-aggregate an existing per_run.csv into summary.csv.
    Report {
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Lag preset (low, medium, high) or bounds as `LO,HI`.
    #[arg(long, value_parser = parse_lag)]
    lag: Option<LagSetting>,
    /// direct or layer.
    #[arg(long)]
    arch: Option<Architecture>,
    /// edd or spt.
    #[arg(long)]
    policy: Option<PolicyKind>,
    /// Replications per scenario.
    #[arg(long)]
    reps: Option<u64>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated horizon.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Write the event trace of every run under traces/.
    #[arg(long)]
    emit_trace: bool,
    /// Write the divergence log of every run under logs/.
    #[arg(long)]
    emit_divergence_log: bool,
}

fn parse_lag(s: &str) -> Result<LagSetting, String> {
    if let Ok(p) = s.parse::<LagPreset>() {
        return Ok(p.into());
    }
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected low, medium, high or LO,HI; got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    Ok(LagSetting::Bounds([lo, hi]))
}

impl RunArgs {
    fn base_specs(&self) -> Result<Option<Vec<ScenarioSpec>>> {
        match &self.config {
            Some(path) => Ok(Some(load_config(path)?)),
            None => Ok(None),
        }
    }

    fn apply(&self, spec: &mut ScenarioSpec) {
        if let Some(lag) = self.lag {
            spec.lag = lag;
        }
        if let Some(arch) = self.arch {
            spec.arch = arch;
        }
        if let Some(policy) = self.policy {
            spec.policy = policy;
        }
        if let Some(reps) = self.reps {
            spec.replications = reps;
        }
        if let Some(seed) = self.seed {
            spec.base_seed = seed;
        }
        if let Some(horizon) = self.horizon {
            spec.sim.horizon = horizon;
        }
    }

    fn options(&self) -> SweepOptions {
        SweepOptions {
            out_dir: Some(self.out_dir.clone()),
            divergence_logs: self.emit_divergence_log,
            traces: self.emit_trace,
        }
    }
}

fn single_grid(args: &RunArgs) -> Result<Vec<ScenarioSpec>> {
    let mut spec = match args.base_specs()? {
        Some(specs) if specs.len() == 1 => specs.into_iter().next().unwrap_or_default(),
        Some(specs) => bail!("`run` takes one scenario, the config defines {}; use `sweep`", specs.len()),
        None => ScenarioSpec::default(),
    };
    args.apply(&mut spec);
    Ok(vec![spec])
}

fn sweep_grid(args: &RunArgs) -> Result<Vec<ScenarioSpec>> {
    let grid = match args.base_specs()? {
        Some(mut specs) => {
            for spec in &mut specs {
                args.apply(spec);
            }
            specs
        }
        None => {
            // Lag, arch and policy flags narrow the default grid.
            let mut template = ScenarioSpec::default();
            if let Some(reps) = args.reps {
                template.replications = reps;
            }
            if let Some(seed) = args.seed {
                template.base_seed = seed;
            }
            if let Some(horizon) = args.horizon {
                template.sim.horizon = horizon;
            }
            let mut grid: Vec<ScenarioSpec> = default_grid(&template)
                .into_iter()
                .filter(|s| args.arch.is_none_or(|a| s.arch == a))
                .filter(|s| args.policy.is_none_or(|p| s.policy == p))
                .collect();
            if let Some(lag) = args.lag {
                let first = grid.first().map(|s| s.lag);
                grid.retain(|s| Some(s.lag) == first);
                for s in &mut grid {
                    s.lag = lag;
                }
            }
            grid
        }
    };
    Ok(grid)
}

fn execute(grid: Vec<ScenarioSpec>, args: &RunArgs) -> Result<()> {
    let runs: u64 = grid.iter().map(|s| s.replications).sum();
    let started = Instant::now();
    let result = run_sweep(&grid, &args.options()).context("sweep failed")?;
    eprintln!(
        "{runs} runs in {:.1}s, results in {}",
        started.elapsed().as_secs_f64(),
        args.out_dir.display()
    );
    print!("{}", format_summary(&result.summary));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => single_grid(args).and_then(|g| execute(g, args)),
        Command::Sweep(args) => sweep_grid(args).and_then(|g| execute(g, args)),
        Command::Report { out_dir } => report(out_dir)
            .map(|summary| print!("{}", format_summary(&summary)))
            .with_context(|| format!("report on {} failed", out_dir.display())),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
