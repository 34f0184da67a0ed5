use std::path::Path;
use std::process::{Command, Output};

use droughtcast::synth::{generate, DatasetPaths, SynthConfig};

fn droughtcast(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_droughtcast"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DROUGHTCAST_SEED")
        .output()
        .expect("binary runs")
}

fn dataset(dir: &Path) -> DatasetPaths {
    generate(&SynthConfig::years(2006, 2012))
        .unwrap()
        .write_to_dir(dir)
        .unwrap()
}

fn prepare_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "prepare",
        "--train",
        "train_timeseries.csv",
        "--validation",
        "validation_timeseries.csv",
        "--test",
        "test_timeseries.csv",
    ];
    v.extend_from_slice(extra);
    v
}

#[test]
fn missing_fips_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let out = droughtcast(&prepare_args(&["--out", "p.csv"]), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--fips"));
    let out = droughtcast(&prepare_args(&["--fips", "nope.csv", "--out", "p.csv"]), dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn prepare_reports_counts_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let a = droughtcast(&prepare_args(&["--fips", "fips.csv", "--out", "a.csv"]), dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let stdout = String::from_utf8(a.stdout).unwrap();
    assert!(stdout.ends_with("feature+score columns\n"), "{stdout}");
    assert!(stdout.contains(", 19 feature+score"));
    let b = droughtcast(&prepare_args(&["--fips", "fips.csv", "--out", "b.csv"]), dir.path());
    assert!(b.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("a.csv")).unwrap(),
        std::fs::read(dir.path().join("b.csv")).unwrap()
    );
    // one-day windows keep one row per scored day
    let c = droughtcast(
        &prepare_args(&["--fips", "fips.csv", "--out", "c.csv", "--window-days", "1"]),
        dir.path(),
    );
    assert_eq!(String::from_utf8(c.stdout).unwrap(), stdout);
}

#[test]
fn train_predict_and_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let p = droughtcast(&prepare_args(&["--fips", "fips.csv", "--out", "p.csv"]), dir.path());
    assert!(p.status.success());
    let t = droughtcast(
        &[
            "train",
            "--task",
            "presence",
            "--data",
            "p.csv",
            "--out",
            "m",
            "--n-estimators",
            "4,5,6",
        ],
        dir.path(),
    );
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    assert!(String::from_utf8_lossy(&t.stdout).contains("VotingEnsemble (Soft)"));

    let e = droughtcast(
        &["evaluate", "--model", "m/presence_ensemble.model", "--data", "p.csv"],
        dir.path(),
    );
    assert!(e.status.success());
    assert!(String::from_utf8_lossy(&e.stdout).contains("weighted avg"));

    let ok = droughtcast(
        &[
            "predict",
            "--model",
            "m/presence_ensemble.model",
            "--input",
            "p.csv",
            "--out",
            "pred.csv",
        ],
        dir.path(),
    );
    assert!(ok.status.success());
    let preds = std::fs::read_to_string(dir.path().join("pred.csv")).unwrap();
    assert!(preds.starts_with("fips,date,predicted,p_0,p_1\n"));

    // drop the PS column from the prepared file
    let text = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            cells.remove(3);
            cells.join(",") + "\n"
        })
        .collect();
    std::fs::write(dir.path().join("short.csv"), stripped).unwrap();
    let bad = droughtcast(
        &[
            "predict",
            "--model",
            "m/presence_ensemble.model",
            "--input",
            "short.csv",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(1));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("PS"), "{err}");
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn bad_flag_values_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = droughtcast(&["train", "--data", "p.csv", "--test-fraction", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = droughtcast(&["trends", "--data", "p.csv", "--label", "D9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
