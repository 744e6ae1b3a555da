//! Evaluation measures over divergence records and completed jobs.
//!
//! All per-run measures skip the warm-up span: records by commit time,
//! jobs by completion time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Architecture, DivergenceRecord, Job, OutcomeCategory, SimTime, Visibility};
use crate::policy::PolicyKind;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("aggregation needs at least two values, got {0}")]
    TooFewValues(usize),
}

/// Per-replication output handed to the metrics.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub rep: u64,
    /// Lag regime label (`low`, `medium`, `high`, or a custom label).
    pub lag: String,
    pub policy: PolicyKind,
    pub arch: Architecture,
    pub horizon: SimTime,
    pub warmup_cutoff: SimTime,
    pub records: Vec<DivergenceRecord>,
    pub completed_jobs: Vec<Job>,
    pub generated: usize,
    pub incomplete: usize,
}

impl RunResult {
    /// Records committed at or after the warm-up cutoff.
    pub fn scored_records(&self) -> impl Iterator<Item = &DivergenceRecord> {
        let cutoff = self.warmup_cutoff;
        self.records.iter().filter(move |r| r.commit_time >= cutoff)
    }

    /// Jobs completed after the warm-up cutoff.
    pub fn scored_jobs(&self) -> impl Iterator<Item = &Job> {
        let cutoff = self.warmup_cutoff;
        self.completed_jobs
            .iter()
            .filter(move |j| j.completion_time.is_some_and(|c| c > cutoff))
    }

    pub fn fallbacks(&self) -> usize {
        self.records.iter().filter(|r| r.fallback).count()
    }
}

/// Mean weighted tardiness and the job count it averages over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tardiness {
    pub value: f64,
    pub jobs: usize,
}

impl Tardiness {
    /// Set when no job qualified and the value defaulted to zero.
    pub fn is_empty(&self) -> bool {
        self.jobs == 0
    }
}

/// `(1/N) * sum w_i * max(0, C_i - d_i)` over completed jobs.
pub fn mean_weighted_tardiness<'a>(jobs: impl IntoIterator<Item = &'a Job>) -> Tardiness {
    let (sum, n) = jobs
        .into_iter()
        .filter_map(Job::weighted_tardiness)
        .fold((0.0, 0usize), |(s, n), t| (s + t, n + 1));
    Tardiness {
        value: if n == 0 { 0.0 } else { sum / n as f64 },
        jobs: n,
    }
}

pub fn weighted_tardiness(result: &RunResult) -> Tardiness {
    mean_weighted_tardiness(result.scored_jobs())
}

/// Completions after warm-up per time unit of the scored span.
pub fn throughput(result: &RunResult) -> f64 {
    let span = result.horizon - result.warmup_cutoff;
    if span <= 0.0 {
        return 0.0;
    }
    result.scored_jobs().count() as f64 / span
}

/// Dispatches that did not execute as intended, human overrides included.
pub fn count_invalid(result: &RunResult) -> usize {
    result.scored_records().filter(|r| r.is_disturbed()).count()
}

pub fn count_visible(result: &RunResult) -> usize {
    result
        .scored_records()
        .filter(|r| r.visibility == Visibility::Visible)
        .count()
}

/// What a downstream learner receives for one dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerOutcome {
    Success,
    /// The layer's typed outcome.
    Typed(OutcomeCategory),
    /// The direct baseline's undifferentiated failure flag.
    Failure,
}

pub fn learner_view(record: &DivergenceRecord) -> LearnerOutcome {
    match (record.category(), record.arch) {
        (OutcomeCategory::Clean, _) => LearnerOutcome::Success,
        (category, Architecture::Layer) => LearnerOutcome::Typed(category),
        (_, Architecture::Direct) => LearnerOutcome::Failure,
    }
}

/// Share of disturbed dispatches the learner sees with a distinct cause.
/// Vacuously 1.0 when nothing was disturbed.
pub fn attribution_coverage(result: &RunResult) -> f64 {
    let (typed, disturbed) = result
        .scored_records()
        .map(learner_view)
        .fold((0usize, 0usize), |(t, d), view| match view {
            LearnerOutcome::Success => (t, d),
            LearnerOutcome::Typed(_) => (t + 1, d + 1),
            LearnerOutcome::Failure => (t, d + 1),
        });
    if disturbed == 0 {
        1.0
    } else {
        typed as f64 / disturbed as f64
    }
}

/// Learner-visible counts of disturbed dispatches per outcome category.
/// Empty for the direct baseline, which exposes no types.
pub fn composition_by_type(result: &RunResult) -> BTreeMap<OutcomeCategory, usize> {
    let mut counts = BTreeMap::new();
    for record in result.scored_records() {
        if let LearnerOutcome::Typed(category) = learner_view(record) {
            *counts.entry(category).or_insert(0) += 1;
        }
    }
    counts
}

/// Mean with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub half_width_95: f64,
    pub n: usize,
}

pub fn aggregate(values: &[f64]) -> Result<Summary, MetricsError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricsError::TooFewValues(n));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    Ok(Summary {
        mean,
        half_width_95: 1.96 * (sd / nf.sqrt()),
        n,
    })
}

/// One row of the per-run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerRunRow {
    pub seed: u64,
    pub rep: u64,
    pub lag: String,
    pub arch: Architecture,
    pub policy: PolicyKind,
    pub invalid: usize,
    pub visible: usize,
    pub t_w: f64,
    pub throughput: f64,
    pub coverage: f64,
    pub transactional: usize,
    pub physical: usize,
    pub combined: usize,
    pub human_override: usize,
    pub fallbacks: usize,
}

impl PerRunRow {
    pub fn from_result(result: &RunResult) -> Self {
        let composition = composition_by_type(result);
        let count = |c| composition.get(&c).copied().unwrap_or(0);
        Self {
            seed: result.seed,
            rep: result.rep,
            lag: result.lag.clone(),
            arch: result.arch,
            policy: result.policy,
            invalid: count_invalid(result),
            visible: count_visible(result),
            t_w: weighted_tardiness(result).value,
            throughput: throughput(result),
            coverage: attribution_coverage(result),
            transactional: count(OutcomeCategory::Transactional),
            physical: count(OutcomeCategory::Physical),
            combined: count(OutcomeCategory::Combined),
            human_override: count(OutcomeCategory::HumanOverride),
            fallbacks: result.fallbacks(),
        }
    }

    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::InvalidDispatches => self.invalid as f64,
            Metric::VisibleDivergence => self.visible as f64,
            Metric::WeightedTardiness => self.t_w,
            Metric::Throughput => self.throughput,
            Metric::AttributionCoverage => self.coverage,
        }
    }
}

/// Rows of the aggregated report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    InvalidDispatches,
    VisibleDivergence,
    WeightedTardiness,
    Throughput,
    AttributionCoverage,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::InvalidDispatches,
        Metric::VisibleDivergence,
        Metric::WeightedTardiness,
        Metric::Throughput,
        Metric::AttributionCoverage,
    ];
}

/// One row of the summary CSV: a metric for one lag and policy group, with
/// the direct and layer columns side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub lag: String,
    /// `pooled`, `edd` or `spt`.
    pub policy: String,
    pub metric: Metric,
    pub n: usize,
    pub direct_mean: Option<f64>,
    pub direct_ci95: Option<f64>,
    pub layer_mean: Option<f64>,
    pub layer_ci95: Option<f64>,
}

fn lag_order(label: &str) -> (usize, &str) {
    match label {
        "low" => (0, label),
        "medium" => (1, label),
        "high" => (2, label),
        _ => (3, label),
    }
}

fn mean_and_ci(values: &[f64]) -> (Option<f64>, Option<f64>) {
    match aggregate(values) {
        Ok(s) => (Some(s.mean), Some(s.half_width_95)),
        Err(_) if values.len() == 1 => (Some(values[0]), None),
        Err(_) => (None, None),
    }
}

/// Aggregates per-run rows into the summary table: for each lag, a pooled
/// group over all policies followed by one group per policy.
pub fn summarize(rows: &[PerRunRow]) -> Vec<SummaryRow> {
    let mut lags: Vec<&str> = rows.iter().map(|r| r.lag.as_str()).collect();
    lags.sort_by(|a, b| lag_order(a).cmp(&lag_order(b)));
    lags.dedup();
    let mut out = Vec::new();
    for lag in lags {
        let at_lag: Vec<&PerRunRow> = rows.iter().filter(|r| r.lag == lag).collect();
        let mut groups: Vec<(String, Vec<&PerRunRow>)> = vec![("pooled".into(), at_lag.clone())];
        for policy in PolicyKind::ALL {
            let group: Vec<&PerRunRow> = at_lag.iter().copied().filter(|r| r.policy == policy).collect();
            if !group.is_empty() {
                groups.push((policy.as_str().into(), group));
            }
        }
        for (policy, group) in groups {
            for metric in Metric::ALL {
                let values = |arch| -> Vec<f64> {
                    group
                        .iter()
                        .filter(|r| r.arch == arch)
                        .map(|r| r.metric(metric))
                        .collect()
                };
                let direct = values(Architecture::Direct);
                let layer = values(Architecture::Layer);
                let (direct_mean, direct_ci95) = mean_and_ci(&direct);
                let (layer_mean, layer_ci95) = mean_and_ci(&layer);
                out.push(SummaryRow {
                    lag: lag.to_string(),
                    policy: policy.clone(),
                    metric,
                    n: direct.len().max(layer.len()),
                    direct_mean,
                    direct_ci95,
                    layer_mean,
                    layer_ci95,
                });
            }
        }
    }
    out
}
