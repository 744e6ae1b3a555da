//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use execlayer::domain::{Architecture, Job, JobId, OutcomeCategory, ResourceId};
use execlayer::exec::{Engine, ExecConfig, ExecutionCache};
use execlayer::harness::{default_grid, run_sweep, ScenarioSpec, SweepOptions, SweepReport};
use execlayer::metrics::{
    aggregate, composition_by_type, count_invalid, mean_weighted_tardiness, PerRunRow,
};
use execlayer::policy::PolicyKind;
use execlayer::sim::{LagPreset, SimConfig, UniformRange, WindowAnchor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Sweep {
    report: SweepReport,
    elapsed: Duration,
}

fn full_sweep(dir: &Path) -> Sweep {
    let grid = default_grid(&ScenarioSpec::default());
    let started = Instant::now();
    let report = run_sweep(
        &grid,
        &SweepOptions {
            out_dir: Some(dir.to_path_buf()),
            divergence_logs: true,
            traces: false,
        },
    )
    .expect("default sweep");
    Sweep {
        report,
        elapsed: started.elapsed(),
    }
}

fn rows<'a>(sweep: &'a Sweep, lag: &'a str, arch: Architecture) -> impl Iterator<Item = &'a PerRunRow> {
    sweep
        .report
        .rows
        .iter()
        .filter(move |r| r.lag == lag && r.arch == arch)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// (direct, layer) row pairs sharing lag, policy and replication.
fn pairs<'a>(sweep: &'a Sweep, lag: &'a str) -> Vec<(&'a PerRunRow, &'a PerRunRow)> {
    let layer: BTreeMap<(PolicyKind, u64), &PerRunRow> = rows(sweep, lag, Architecture::Layer)
        .map(|r| ((r.policy, r.rep), r))
        .collect();
    rows(sweep, lag, Architecture::Direct)
        .filter_map(|d| layer.get(&(d.policy, d.rep)).map(|l| (d, *l)))
        .collect()
}

fn c1_zero_visible(sweep: &Sweep) -> Verdict {
    let layer: Vec<_> = sweep.report.rows.iter().filter(|r| r.arch == Architecture::Layer).collect();
    let visible: usize = layer.iter().map(|r| r.visible).sum();
    let runs = sweep.report.rows.len();
    check(
        runs == 600 && visible == 0 && sweep.elapsed < Duration::from_secs(300),
        format!(
            "{runs} runs in {:.1}s; visible divergence over {} layer runs = {visible}",
            sweep.elapsed.as_secs_f64(),
            layer.len()
        ),
    )
}

fn c2_paired_invalid(sweep: &Sweep) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for lag in ["low", "medium"] {
        let p = pairs(sweep, lag);
        let wins = p.iter().filter(|(d, l)| l.invalid <= d.invalid).count();
        let share = wins as f64 / p.len() as f64;
        ok &= share >= 0.95;
        parts.push(format!("{lag}: layer<=direct in {wins}/{}", p.len()));
    }
    let diffs: Vec<f64> = pairs(sweep, "medium")
        .iter()
        .map(|(d, l)| d.invalid as f64 - l.invalid as f64)
        .collect();
    let s = aggregate(&diffs).expect("paired differences");
    ok &= s.mean - s.half_width_95 > 0.0;
    parts.push(format!(
        "medium mean reduction {:.2} +/- {:.2}",
        s.mean, s.half_width_95
    ));
    check(ok, parts.join("; "))
}

fn c3_tardiness_trend(sweep: &Sweep) -> Verdict {
    let ratio = |lag: &str| {
        mean(rows(sweep, lag, Architecture::Layer).map(|r| r.t_w))
            / mean(rows(sweep, lag, Architecture::Direct).map(|r| r.t_w))
    };
    let (low, medium, high) = (ratio("low"), ratio("medium"), ratio("high"));
    check(
        low < 0.5 && medium < 0.9 && (0.8..=1.1).contains(&high),
        format!("T_w layer/direct: low {low:.3} (<0.5), medium {medium:.3} (<0.9), high {high:.3} (in [0.8, 1.1])"),
    )
}

fn c4_throughput(sweep: &Sweep) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for lag in LagPreset::ALL.map(LagPreset::as_str) {
        let d = mean(rows(sweep, lag, Architecture::Direct).map(|r| r.throughput));
        let l = mean(rows(sweep, lag, Architecture::Layer).map(|r| r.throughput));
        let rel = (l - d).abs() / d;
        let both = 0.5 * (d + l);
        ok &= rel < 0.01 && (0.115..=0.135).contains(&both);
        parts.push(format!("{lag}: {d:.4} vs {l:.4} ({:.2}%)", rel * 100.0));
    }
    check(ok, parts.join("; "))
}

fn c5_attribution(sweep: &Sweep) -> Verdict {
    let coverage_ok = sweep.report.rows.iter().all(|r| match r.arch {
        Architecture::Layer => r.coverage == 1.0,
        Architecture::Direct => r.coverage == 0.0,
    });
    let mut categories_ok = true;
    let mut parts = Vec::new();
    for lag in LagPreset::ALL.map(LagPreset::as_str) {
        let layer: Vec<_> = rows(sweep, lag, Architecture::Layer).collect();
        let counts = [
            layer.iter().map(|r| r.transactional).sum::<usize>(),
            layer.iter().map(|r| r.physical).sum(),
            layer.iter().map(|r| r.combined).sum(),
            layer.iter().map(|r| r.human_override).sum(),
        ];
        categories_ok &= counts.iter().all(|&c| c > 0);
        parts.push(format!("{lag} T/P/C/H = {counts:?}"));
    }
    let partition_ok = sweep.report.results.iter().all(|r| {
        let composition: usize = composition_by_type(r).values().sum();
        let disturbed = r.scored_records().filter(|d| d.is_disturbed()).count();
        let by_category = r
            .scored_records()
            .filter(|d| OutcomeCategory::DISTURBED.contains(&d.category()))
            .count();
        let typed_ok = match r.arch {
            Architecture::Layer => composition == disturbed,
            Architecture::Direct => composition == 0,
        };
        typed_ok && disturbed == by_category && disturbed == count_invalid(r)
    });
    check(
        coverage_ok && categories_ok && partition_ok,
        format!(
            "coverage layer=1/direct=0: {coverage_ok}; partition exact: {partition_ok}; {}",
            parts.join("; ")
        ),
    )
}

fn c6_snapshot_oracle() -> Verdict {
    let traces = 1000u64;
    let mut latches = 0usize;
    for seed in 0..traces {
        let events = common::random_trace(seed);
        let mut cache = ExecutionCache::new();
        let mut i = 0;
        let mut times: Vec<f64> = events.iter().map(|e| e.visible_time).collect();
        times.dedup();
        for (epoch, &t) in times.iter().enumerate() {
            while i < events.len() && events[i].visible_time <= t {
                cache.ingest_event(&events[i]).map_err(|e| format!("seed {seed}: {e}"))?;
                i += 1;
            }
            let got = cache.latch_snapshot(epoch as u64, t, ResourceId(0));
            let want = common::oracle_snapshot(&events, epoch as u64, t);
            if got != want {
                return Err(format!("trace {seed}: snapshot at {t} differs from the fold"));
            }
            latches += 1;
        }
    }
    Ok(format!("{traces} traces, {latches} latches, all equal"))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["", "logs"] {
        for entry in fs::read_dir(dir.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.is_file() {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn c7_determinism(first: &Path) -> Verdict {
    let second = tempfile::tempdir().unwrap();
    full_sweep(second.path());
    let (a, b) = (read_tree(first), read_tree(second.path()));
    let logs = a.keys().filter(|k| k.starts_with("logs")).count();
    check(
        a == b && a.contains_key("per_run.csv") && logs == 600,
        format!("{} files compared ({logs} divergence logs), identical: {}", a.len(), a == b),
    )
}

fn c8_formulas() -> Verdict {
    let done = |id, c: f64, d, w| Job::new(JobId(id), 0.0, 1.0, d, w).unwrap().completed_at(c).unwrap();
    let hand = mean_weighted_tardiness(&[done(0, 10.0, 8.0, 2.0), done(1, 5.0, 6.0, 1.0), done(2, 12.0, 12.0, 3.0)]);
    let hand_ok = (hand.value - 4.0 / 3.0).abs() < 1e-9;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut linear_ok = true;
    for _ in 0..200 {
        let jobs: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..30))
            .map(|_| (rng.gen_range(1.0..100.0), rng.gen_range(0.0..100.0), f64::from(rng.gen_range(1..=5))))
            .collect();
        let c = rng.gen_range(0.1..10.0);
        let build = |scale: f64| -> Vec<Job> {
            jobs.iter()
                .enumerate()
                .map(|(i, &(cmp, d, w))| done(i as u32, cmp, d, w * scale))
                .collect()
        };
        let base = mean_weighted_tardiness(&build(1.0)).value;
        let scaled = mean_weighted_tardiness(&build(c)).value;
        linear_ok &= (scaled - c * base).abs() <= 1e-9 * (1.0 + (c * base).abs());
    }

    let ci = aggregate(&[1.0, 3.0]).unwrap();
    let ci_ok = ci.mean == 2.0 && ci.half_width_95 == 1.96;
    check(
        hand_ok && linear_ok && ci_ok,
        format!(
            "hand case {:.12}; linearity over 200 cases: {linear_ok}; CI{{1,3}} half-width {}",
            hand.value, ci.half_width_95
        ),
    )
}

fn c9_livelock() -> Verdict {
    let sim = SimConfig {
        seed: 1,
        p_sys: 1.0,
        p_phys: 0.0,
        p_hum: 0.0,
        lag: UniformRange::new(0.0, 0.0),
        interarrival: UniformRange::new(0.5, 1.0),
        window_anchor: WindowAnchor::FirstIntent,
        window_offset: UniformRange::new(0.3, 0.3),
        horizon: 400.0,
        ..SimConfig::default()
    };
    let exec = ExecConfig::new(Architecture::Layer);
    let out = Engine::new(sim, exec, &PolicyKind::Edd)
        .and_then(Engine::run)
        .map_err(|e| e.to_string())?;
    let fallbacks = out.records.iter().filter(|r| r.fallback).count();
    let bounded = out.records.iter().all(|r| r.retries <= 5) && out.max_retries <= 5;
    check(
        fallbacks > 0 && bounded,
        format!(
            "{} aborts, {fallbacks} fallback commits, max re-latches {}",
            out.aborts, out.max_retries
        ),
    )
}

fn c10_zero_lag_equivalence() -> Verdict {
    let mut checked = 0;
    for seed in 0..20u64 {
        for policy in PolicyKind::ALL {
            let sim = SimConfig {
                seed,
                p_sys: 0.0,
                p_phys: 0.0,
                p_hum: 0.0,
                lag: UniformRange::new(0.0, 0.0),
                ..SimConfig::default()
            };
            let run = |arch| {
                Engine::new(sim.clone(), ExecConfig::new(arch), &policy)
                    .and_then(Engine::run)
                    .map_err(|e| e.to_string())
            };
            let (d, l) = (run(Architecture::Direct)?, run(Architecture::Layer)?);
            let seq = |o: &execlayer::exec::ReplicationOutcome| {
                o.occupancy.iter().map(|i| (i.job, i.start, i.end)).collect::<Vec<_>>()
            };
            let tw = |o: &execlayer::exec::ReplicationOutcome| mean_weighted_tardiness(&o.completed_jobs).value;
            if seq(&d) != seq(&l) || tw(&d) != tw(&l) {
                return Err(format!("seed {seed} {policy}: dispatch sequences differ"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} seed/policy pairs with identical dispatch sequences and T_w"))
}

fn main() {
    let out = tempfile::tempdir().unwrap();
    let sweep = full_sweep(out.path());
    let criteria: Vec<Criterion> = vec![
        ("zero visible divergence under the layer", Box::new(|| c1_zero_visible(&sweep))),
        ("paired invalid-dispatch reduction", Box::new(|| c2_paired_invalid(&sweep))),
        ("tardiness trend across lag", Box::new(|| c3_tardiness_trend(&sweep))),
        ("throughput neutrality", Box::new(|| c4_throughput(&sweep))),
        ("attribution coverage and composition", Box::new(|| c5_attribution(&sweep))),
        ("snapshot oracle equivalence", Box::new(c6_snapshot_oracle)),
        ("byte-identical sweep outputs", Box::new(|| c7_determinism(out.path()))),
        ("metric formulas", Box::new(c8_formulas)),
        ("livelock mitigation", Box::new(c9_livelock)),
        ("zero-lag, zero-disturbance equivalence", Box::new(c10_zero_lag_equivalence)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
