use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tumorsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tumorsim"))
        .args(args)
        .env("TUMORSIM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn data_rows(csv: &str) -> usize {
    csv.lines().filter(|l| !l.starts_with('#') && !l.starts_with('t')).count()
}

const SHORT: &str = "scheme.t_end = 0.002\nscheme.output_every = 5\n";

#[test]
fn validate_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let ok = write_config(tmp.path(), "ok.ini", "# defaults\n");
    assert_eq!(tumorsim(&["validate", "--config", &ok]).status.code(), Some(0));

    let bad = write_config(tmp.path(), "bad.ini", "E.kind = const\nE.value = 1.5\n");
    let out = tumorsim(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));

    let unknown = write_config(tmp.path(), "unknown.ini", "bogus = 1\n");
    let out = tumorsim(&["validate", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let missing = tmp.path().join("nope.ini");
    assert_eq!(tumorsim(&["validate", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(tumorsim(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn zero_horizon_run_writes_one_row_and_one_snapshot() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "t0.ini", "scheme.t_end = 0\n");
    let out_dir = tmp.path().join("out");
    let out = tumorsim(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let diag = fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    assert_eq!(data_rows(&diag), 1);
    let snaps: Vec<_> = fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().into_string().unwrap())
        .filter(|n| n.starts_with("snap_"))
        .collect();
    assert_eq!(snaps.len(), 5);
    assert!(snaps.iter().all(|n| n.starts_with("snap_000000_")));
    assert!(out_dir.join("config.ini").exists());
}

#[test]
fn runs_are_deterministic_and_restartable() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{SHORT}init.noise = 0.01\nseed = 7\n");
    let cfg = write_config(tmp.path(), "noisy.ini", &text);
    let mut diags = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let out = tumorsim(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        diags.push(fs::read_to_string(dir.join("diagnostics.csv")).unwrap());
    }
    assert_eq!(diags[0], diags[1]);
    assert_eq!(data_rows(&diags[0]), 5);

    // the emitted config reproduces the run
    let dir = tmp.path().join("c");
    let emitted = tmp.path().join("a").join("config.ini");
    let out = tumorsim(&["run", "--config", emitted.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.join("diagnostics.csv")).unwrap(), diags[0]);

    let prefix = tmp.path().join("a").join("snap_000020");
    let restart = write_config(
        tmp.path(),
        "restart.ini",
        &format!("{SHORT}init.kind = snapshot\ninit.snapshot = {}\n", prefix.display()),
    );
    assert_eq!(tumorsim(&["validate", "--config", &restart]).status.code(), Some(0));
}

#[test]
fn run_refuses_invalid_hypotheses_without_force() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.ini", &format!("{SHORT}E.kind = const\nE.value = 1.5\n"));
    let dir = tmp.path().join("out");
    assert_eq!(tumorsim(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()]).status.code(), Some(1));
    assert!(!dir.join("diagnostics.csv").exists());
    let out = tumorsim(&["run", "--config", &cfg, "--out", dir.to_str().unwrap(), "--force"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("diagnostics.csv").exists());
}

#[test]
fn sweep_writes_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "sweep.ini", SHORT);
    let dir = tmp.path().join("sw");
    let out = tumorsim(&["sweep", "--config", &cfg, "--axis", "m", "--values", "8,16,32", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.join("sweep_summary.csv")).unwrap();
    assert!(summary.starts_with("axis,value,status"));
    assert_eq!(summary.lines().filter(|l| l.starts_with("m,")).count(), 3);
    assert!(summary.contains("# slope metric=diff_to_next"));
    for i in 0..3 {
        assert!(dir.join(format!("diag_m_{i}.csv")).exists());
    }

    let out = tumorsim(&["sweep", "--config", &cfg, "--axis", "eps", "--values", "0.1,0.01", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = tumorsim(&["sweep", "--config", &cfg, "--axis", "nu", "--values", "1,2,3"]);
    assert_eq!(out.status.code(), Some(1));
}
