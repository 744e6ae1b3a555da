use std::fs;
use std::process::{Command, Output};

fn execlayer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_execlayer"))
        .args(args)
        .output()
        .expect("spawn execlayer")
}

#[test]
fn run_writes_outputs_and_report_reaggregates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = execlayer(&[
        "run", "--lag", "low", "--arch", "direct", "--policy", "spt", "--reps", "3", "--seed", "7",
        "--horizon", "300", "--out-dir", out, "--emit-divergence-log", "--emit-trace",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let per_run = fs::read_to_string(dir.path().join("per_run.csv")).unwrap();
    assert_eq!(per_run.lines().count(), 4);
    assert!(per_run.lines().nth(1).unwrap().contains(",low,direct,spt,"));
    // Seeds are base_seed xor rep.
    for seed in [7, 6, 5] {
        let log = dir.path().join(format!("logs/{seed}_direct_spt_low.jsonl"));
        assert!(log.exists(), "{}", log.display());
        assert!(dir.path().join(format!("traces/{seed}_direct_spt_low.jsonl")).exists());
    }
    let first = fs::read_to_string(dir.path().join("logs/7_direct_spt_low.jsonl")).unwrap();
    assert!(first.starts_with("{\"epoch\":"));

    let summary = fs::read(dir.path().join("summary.csv")).unwrap();
    fs::remove_file(dir.path().join("summary.csv")).unwrap();
    let res = execlayer(&["report", "--out-dir", out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(fs::read(dir.path().join("summary.csv")).unwrap(), summary);
    assert!(String::from_utf8_lossy(&res.stdout).contains("weighted_tardiness"));
}

#[test]
fn sweep_flags_narrow_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = execlayer(&["sweep", "--reps", "2", "--horizon", "200", "--policy", "edd", "--out-dir", out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let per_run = fs::read_to_string(dir.path().join("per_run.csv")).unwrap();
    // 3 lags x 2 architectures x 2 reps.
    assert_eq!(per_run.lines().count(), 13);
    assert!(!dir.path().join("logs").exists());
}

#[test]
fn config_file_drives_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.toml");
    fs::write(
        &cfg,
        "replications = 2\n[sim]\nhorizon = 200.0\n\n[[scenario]]\nlag = [0.1, 1.5]\narch = \"direct\"\n\n[[scenario]]\nlag = \"medium\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = execlayer(&["sweep", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let per_run = fs::read_to_string(out.join("per_run.csv")).unwrap();
    assert_eq!(per_run.lines().count(), 5);
    assert!(per_run.lines().skip(1).all(|l| l.contains(",medium,")));
}

#[test]
fn failures_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "lag = \"low\"\nreplicas = 3\n").unwrap();
    let res = execlayer(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("replicas") && err.contains("line 2"), "{err}");
    assert!(!dir.path().join("per_run.csv").exists());

    let res = execlayer(&["run", "--arch", "sideways"]);
    assert!(!res.status.success());
    let res = execlayer(&["run", "--reps", "0", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("replications"));
    let res = execlayer(&["report", "--out-dir", dir.path().join("missing").to_str().unwrap()]);
    assert!(!res.status.success());
}
