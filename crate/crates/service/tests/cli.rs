use std::path::Path;
use std::process::{Command, Output};

use woz_core::analysis::analyze_records;
use woz_core::{import_csv, ErrorRepository, LogAnalysis};
use woz_service::cli::render_text;

const TABLE1: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures/table1.csv");

fn woz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_woz")).args(args).output().unwrap()
}

fn simulate(trials: &str, target: &str, seed: &str) -> Output {
    woz(&[
        "simulate", "--repo", TABLE1, "--trials", trials, "--target", target, "--seed", seed,
    ])
}

#[test]
fn validate_table1() {
    let out = woz(&["validate", TABLE1]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("2 entries (oats, flour)"));
}

#[test]
fn validate_rejects_bad_repository() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(
        &path,
        "ID,correctAnswer,segmentationError,similarityError,wildError,noRecognitionError\n0,oats,cinnamon,flour,carrots,bread\n",
    )
    .unwrap();
    let out = woz(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid repository"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(woz(&[]).status.code(), Some(1));
    assert_eq!(woz(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(simulate("12", "150", "7").status.code(), Some(1));
    assert_eq!(simulate("0", "50", "7").status.code(), Some(1));
    assert_eq!(woz(&["validate", "/does/not/exist.csv"]).status.code(), Some(1));
    assert_eq!(woz(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_is_deterministic() {
    let a = simulate("12", "50", "7");
    let b = simulate("12", "50", "7");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    assert!(String::from_utf8_lossy(&a.stderr).contains("final accuracy 50.00"));
    let c = simulate("12", "50", "8");
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.csv");
    let out = woz(&[
        "simulate",
        "--repo",
        TABLE1,
        "--trials",
        "12",
        "--target",
        "70",
        "--seed",
        "7",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), simulate("12", "70", "7").stdout);
}

fn write_log(dir: &Path) -> (std::path::PathBuf, Vec<u8>) {
    let mut log = simulate("24", "50", "1").stdout;
    let second = simulate("24", "70", "2").stdout;
    // Append the second session without its header.
    let body = second.splitn(2, |&b| b == b'\n').nth(1).unwrap();
    log.extend_from_slice(body);
    let path = dir.join("combined.csv");
    std::fs::write(&path, &log).unwrap();
    (path, log)
}

#[test]
fn analyze_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let (path, bytes) = write_log(dir.path());
    let repo = ErrorRepository::parse("table1", &std::fs::read(TABLE1).unwrap()).unwrap();
    let records = import_csv(&bytes).unwrap().records;
    let expected: LogAnalysis = analyze_records(&records, &repo.ground_truths()).unwrap();

    let out = woz(&["analyze", path.to_str().unwrap(), "--json", "--repo", TABLE1]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let got: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(got, serde_json::to_value(&expected).unwrap());
    assert_eq!(got["sessions"].as_array().unwrap().len(), 2);

    let out = woz(&["analyze", path.to_str().unwrap(), "--repo", TABLE1]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), render_text(&expected));
}

#[test]
fn analyze_rejects_tampered_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = String::from_utf8(simulate("12", "50", "7").stdout).unwrap();
    // Flip one logged accuracy so the replay disagrees.
    let tampered = log.replacen(",100.00,", ",99.00,", 1);
    assert_ne!(tampered, log);
    let path = dir.path().join("t.csv");
    std::fs::write(&path, tampered).unwrap();
    let out = woz(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
