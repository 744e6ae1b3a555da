use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::domain::Event;
use crate::metrics::{summarize, Metric, PerRunRow, RunResult, SummaryRow};

pub(crate) const PER_RUN: &str = "per_run.csv";
pub(crate) const SUMMARY: &str = "summary.csv";

/// Sort rank for lag labels: presets in increasing lag, then custom bounds.
pub(crate) fn lag_rank(label: &str) -> u8 {
    match label {
        "low" => 0,
        "medium" => 1,
        "high" => 2,
        _ => 3,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

fn run_stem(result: &RunResult) -> String {
    format!("{}_{}_{}_{}", result.seed, result.arch, result.policy, result.lag)
}

/// Files of one sweep, staged as `*.tmp` and renamed into place on commit.
/// On abort every staged file is removed.
pub(crate) struct OutputSet {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
}

impl OutputSet {
    pub(crate) fn new(dir: PathBuf) -> Result<Self, HarnessError> {
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            dir,
            staged: Vec::new(),
        })
    }

    fn stage(&mut self, rel: &Path) -> Result<(File, PathBuf), HarnessError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let tmp = tmp_path(&path);
        let file = File::create(&tmp).map_err(io_err(&tmp))?;
        self.staged.push((tmp.clone(), path));
        Ok((file, tmp))
    }

    fn csv<T: serde::Serialize>(&mut self, rel: &str, rows: &[T]) -> Result<(), HarnessError> {
        let (file, tmp) = self.stage(Path::new(rel))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        for row in rows {
            w.serialize(row).map_err(csv_err(&tmp))?;
        }
        w.flush().map_err(io_err(&tmp))
    }

    fn lines<T: serde::Serialize>(&mut self, rel: PathBuf, items: impl IntoIterator<Item = T>) -> Result<(), HarnessError> {
        let (file, tmp) = self.stage(&rel)?;
        let mut w = BufWriter::new(file);
        for item in items {
            serde_json::to_writer(&mut w, &item).map_err(|e| io_err(&tmp)(e.into()))?;
            w.write_all(b"\n").map_err(io_err(&tmp))?;
        }
        w.flush().map_err(io_err(&tmp))
    }

    pub(crate) fn per_run(&mut self, rows: &[PerRunRow]) -> Result<(), HarnessError> {
        self.csv(PER_RUN, rows)
    }

    pub(crate) fn summary(&mut self, rows: &[SummaryRow]) -> Result<(), HarnessError> {
        self.csv(SUMMARY, rows)
    }

    pub(crate) fn divergence_log(&mut self, result: &RunResult) -> Result<(), HarnessError> {
        let rel = Path::new("logs").join(format!("{}.jsonl", run_stem(result)));
        let policy = result.policy.as_str();
        self.lines(rel, result.records.iter().map(|r| r.log_line(policy, result.seed)))
    }

    pub(crate) fn trace(&mut self, result: &RunResult, trace: &[Event]) -> Result<(), HarnessError> {
        let rel = Path::new("traces").join(format!("{}.jsonl", run_stem(result)));
        self.lines(rel, trace.iter())
    }

    pub(crate) fn commit(mut self) -> Result<(), HarnessError> {
        let staged = std::mem::take(&mut self.staged);
        for (i, (tmp, path)) in staged.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, path) {
                for (tmp, _) in &staged[i..] {
                    let _ = fs::remove_file(tmp);
                }
                return Err(io_err(path)(e));
            }
        }
        Ok(())
    }

    pub(crate) fn abort(mut self) {
        for (tmp, _) in std::mem::take(&mut self.staged) {
            let _ = fs::remove_file(tmp);
        }
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        for (tmp, _) in &self.staged {
            let _ = fs::remove_file(tmp);
        }
    }
}

pub fn read_per_run(path: &Path) -> Result<Vec<PerRunRow>, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<PerRunRow>, _>>()
        .map_err(csv_err(path))?;
    Ok(rows)
}

/// Writes `summary.csv` into `dir`.
pub fn write_summary(dir: &Path, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut out = OutputSet::new(dir.to_path_buf())?;
    match out.summary(rows) {
        Ok(()) => out.commit(),
        Err(e) => {
            out.abort();
            Err(e)
        }
    }
}

/// Re-aggregates `dir/per_run.csv` into `dir/summary.csv`.
pub fn report(dir: &Path) -> Result<Vec<SummaryRow>, HarnessError> {
    let rows = read_per_run(&dir.join(PER_RUN))?;
    if rows.is_empty() {
        return Err(HarnessError::Config(format!("{} has no rows", dir.join(PER_RUN).display())));
    }
    let summary = summarize(&rows);
    write_summary(dir, &summary)?;
    Ok(summary)
}

fn cell(mean: Option<f64>, ci: Option<f64>) -> String {
    match (mean, ci) {
        (Some(m), Some(c)) => format!("{m:.4} ± {c:.4}"),
        (Some(m), None) => format!("{m:.4}"),
        _ => "-".into(),
    }
}

/// Plain-text table of the summary rows.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:<7} {:<21} {:>5} {:>22} {:>22}",
        "lag", "policy", "metric", "n", "direct", "layer"
    );
    for r in rows {
        let metric = match r.metric {
            Metric::InvalidDispatches => "invalid_dispatches",
            Metric::VisibleDivergence => "visible_divergence",
            Metric::WeightedTardiness => "weighted_tardiness",
            Metric::Throughput => "throughput",
            Metric::AttributionCoverage => "attribution_coverage",
        };
        let _ = writeln!(
            s,
            "{:<10} {:<7} {:<21} {:>5} {:>22} {:>22}",
            r.lag,
            r.policy,
            metric,
            r.n,
            cell(r.direct_mean, r.direct_ci95),
            cell(r.layer_mean, r.layer_ci95)
        );
    }
    s
}
