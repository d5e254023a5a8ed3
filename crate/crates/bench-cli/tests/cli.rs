//! The binary end to end, in temporary output directories.

use std::path::Path;
use std::process::{Command, Output};

fn bench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench-cli")).args(args).arg("--out-dir").arg(dir).output().expect("bench-cli runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = bench(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn report_is_deterministic_and_independent_of_parallelism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--subjects", "2", "--seed", "3", "report"];
    let out_a = ok(a.path(), &args);
    let out_b = ok(b.path(), &[&args[..], &["--sequential"]].concat());
    assert_eq!(out_a, out_b);
    for f in ["report.txt", "report.csv", "report.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    assert_eq!(read(a.path(), "report.txt"), out_a);
    let json: serde_json::Value = serde_json::from_str(&read(a.path(), "report.json")).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    let rows = csv_rows(&read(a.path(), "report.csv"));
    assert_eq!(rows.iter().map(|r| r[0].to_string()).collect::<Vec<_>>(), ["S01", "S02", "AVG", "SD"]);
}

#[test]
fn synth_writes_feature_tables_and_profiles() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["--subjects", "1", "synth"]);
    let cal = csv_rows(&read(d.path(), "data/S01_calibration.csv"));
    let test = csv_rows(&read(d.path(), "data/S01_test.csv"));
    assert_eq!((cal.len(), test.len()), (360, 180));
    let profiles = read(d.path(), "profiles.toml");
    assert!(profiles.contains("S01"));

    // The written profiles reproduce the same tables.
    let e = tempfile::tempdir().unwrap();
    let p = d.path().join("profiles.toml");
    ok(e.path(), &["--profiles", p.to_str().unwrap(), "synth"]);
    assert_eq!(read(d.path(), "data/S01_calibration.csv"), read(e.path(), "data/S01_calibration.csv"));
}

#[test]
fn train_then_eval_matches_report() {
    let d = tempfile::tempdir().unwrap();
    let args = ["--subjects", "1", "--snr-sweep", "-16:-16"];
    ok(d.path(), &[&args[..], &["train"]].concat());
    assert!(d.path().join("models/S01.json").exists());
    ok(d.path(), &[&args[..], &["eval"]].concat());
    ok(d.path(), &[&args[..], &["report"]].concat());

    let train = csv_rows(&read(d.path(), "train.csv"));
    let eval = csv_rows(&read(d.path(), "eval.csv"));
    let report = csv_rows(&read(d.path(), "report.csv"));
    let trials = csv_rows(&read(d.path(), "online_trials.csv"));
    assert_eq!(trials.len(), 52);
    let (t, e, r) = (&train[0], &eval[0], &report[0]);
    assert_eq!(&r[0], "S01");
    // report columns: subject, amps, c, gamma, cv, test, six counts, success, itr
    assert_eq!((&t[1], &t[2], &t[3]), (&r[3], &r[4], &r[5]));
    assert_eq!(&e[1], &r[6]);
    for i in 0..8 {
        assert_eq!(&e[2 + i], &r[7 + i], "column {i}");
    }
}

#[test]
fn simulate_noise_free_is_safe_and_repeatable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--seed", "7", "simulate", "--episodes", "12", "--duration", "30", "--noise-free-sensors"];
    let out = ok(a.path(), &args);
    ok(b.path(), &args);
    assert!(out.contains("0 collisions, 0 unsafe ticks, 0 latch violations"), "{out}");
    assert_eq!(read(a.path(), "episodes.csv"), read(b.path(), "episodes.csv"));
    let summary: serde_json::Value = serde_json::from_str(&read(a.path(), "simulate.json")).unwrap();
    assert_eq!(summary["episodes"], 12);
    assert_eq!(summary["unsafe_episodes"], 0);
    assert_eq!(csv_rows(&read(a.path(), "episodes.csv")).len(), 12);

    let map = a.path().join("box.map");
    std::fs::write(&map, "0,0 4,4\n2 2 0\n").unwrap();
    let out = ok(a.path(), &["simulate", "--episodes", "3", "--duration", "10", "--map", map.to_str().unwrap()]);
    assert!(out.starts_with("3 episodes"), "{out}");
}

#[test]
fn bad_input_fails_cleanly() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["--snr-sweep", "5:1", "report"][..],
        &["--snr-sweep", "abc", "report"],
        &["simulate", "--map", "nowhere"],
        &["--profiles", "/nonexistent.toml", "synth"],
        &["frobnicate"],
    ] {
        let out = bench(d.path(), args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
    }
    let out = bench(d.path(), &["--subjects", "1", "eval"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run `train` first"));
}
