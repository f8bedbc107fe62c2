use std::fs;
use std::process::{Command, Output};

use selfsim::core::dispersion;
use selfsim::core::params::ChainParams;
use selfsim::format::Table;

fn selfsim(args: &[&str]) -> Output {
    selfsim_with_env(args, &[])
}

fn selfsim_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_selfsim"));
    cmd.args(args).env_remove("SELFSIM_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let args = ["dispersion", "--N", "1.3", "--delta", "0.8", "--points", "501"];
    let one = selfsim_with_env(&args, &[("SELFSIM_THREADS", "1")]);
    let four = selfsim_with_env(&args, &[("SELFSIM_THREADS", "4")]);
    assert_eq!(stdout(&one), stdout(&four));
}

#[test]
fn figure_preset_sets_header() {
    let table = Table::parse(&stdout(&selfsim(&["dispersion", "--preset", "fig2", "--points", "11"]))).unwrap();
    assert_eq!(table.meta().get("N").copied(), Some("1.5"));
    assert_eq!(table.meta().get("delta").copied(), Some("0.7"));
    assert_eq!(table.meta().get("preset").copied(), Some("fig2"));
    assert_eq!(table.column("kh").unwrap().len(), 11);
}

#[test]
fn preset_conflicts_with_explicit_delta() {
    let out = selfsim(&["dispersion", "--preset", "fig1", "--delta", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_band_delta_is_a_validation_error() {
    let out = selfsim(&["dispersion", "--delta", "2.5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("delta < 2"), "{err}");
    assert!(err.starts_with("error: dispersion:"), "{err}");
}

#[test]
fn point_mode_matches_library() {
    let table = Table::parse(&stdout(&selfsim(&[
        "dispersion",
        "--point",
        "--kh",
        "1.3",
        "--N",
        "1.5",
        "--delta",
        "0.7",
    ])))
    .unwrap();
    let p = ChainParams::new(1.5, 0.7, 1.0).unwrap();
    let lib = dispersion::omega2(1.3, &p, 1e-10).unwrap();
    assert_eq!(table.column("omega2").unwrap(), vec![lib.value]);
}

#[test]
fn json_record_reruns_to_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("run.json");
    let again = dir.path().join("again.json");
    let args = ["kernel", "--points", "20", "--format", "json", "-o"];
    let first = selfsim(&[&args[..], &[rec.to_str().unwrap()]].concat());
    assert!(first.status.success());
    let second = selfsim(&["rerun", rec.to_str().unwrap(), "-o", again.to_str().unwrap()]);
    assert!(second.status.success());
    let (a, b) = (fs::read(&rec).unwrap(), fs::read(&again).unwrap());
    assert_eq!(a, b);
    assert!(!String::from_utf8(a).unwrap().contains("timestamp"));

    let csv_direct = stdout(&selfsim(&["kernel", "--points", "20"]));
    let csv_rerun = stdout(&selfsim(&["rerun", rec.to_str().unwrap(), "--format", "csv"]));
    assert_eq!(csv_direct, csv_rerun);
}

#[test]
fn timestamp_only_on_request() {
    let text = stdout(&selfsim(&[
        "kernel",
        "--points",
        "5",
        "--format",
        "json",
        "--timestamp",
    ]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["timestamp"].as_u64().unwrap() > 1_600_000_000);
}

#[test]
fn density_slope_matches_power_law() {
    let table = Table::parse(&stdout(&selfsim(&["density", "--points", "5"]))).unwrap();
    let slope = table.column("slope").unwrap()[0];
    let expected = table.column("expected_slope").unwrap()[0];
    assert!((slope / expected - 1.0).abs() < 0.05, "{slope} vs {expected}");
}

#[test]
fn spectral_mode_conserves_energy() {
    let table = Table::parse(&stdout(&selfsim(&["simulate", "--steps", "1000", "--samples", "32"]))).unwrap();
    let drift = table.column("energy_drift").unwrap();
    assert_eq!(drift.len(), 1001);
    assert!(drift.iter().all(|d| d.abs() < 1e-6));
}

#[test]
fn unstable_verlet_step_is_a_numerical_error() {
    let out = selfsim(&["simulate", "--method", "verlet", "--dt", "5", "--steps", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt < "));
}

#[test]
fn bad_thread_setting_is_rejected() {
    for bad in ["0", "many"] {
        let out = selfsim_with_env(&["dispersion", "--points", "3"], &[("SELFSIM_THREADS", bad)]);
        assert_eq!(out.status.code(), Some(2), "{bad}");
    }
}

#[test]
fn snapshots_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let snaps = dir.path().join("snaps");
    let out = selfsim(&[
        "simulate",
        "--steps",
        "20",
        "--samples",
        "16",
        "--max-snapshots",
        "5",
        "--snapshot-dir",
        snaps.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let mut names: Vec<String> = fs::read_dir(&snaps)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(!names.is_empty() && names.len() <= 6, "{names:?}");
    assert_eq!(names[0], "snapshot_00000000.csv");
    let first = Table::parse(&fs::read_to_string(snaps.join(&names[0])).unwrap()).unwrap();
    assert_eq!(first.column("u").unwrap().len(), 16);
}

#[test]
fn quick_check_passes() {
    let out = selfsim(&["check", "--quick"]);
    let text = stdout(&out);
    assert!(text.lines().count() > 20);
}
