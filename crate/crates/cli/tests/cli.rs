use std::process::{Command, Output};

use spongelab::report::{Report, Status};
use spongelab_cli::output::{render, Format, CSV_HEADER};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sponge-lab")).args(args).output().unwrap()
}

fn spec_file(json: &str) -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), json).unwrap();
    f
}

fn report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn separation_report_carries_anchor() {
    let spec = spec_file(r#"{"d": 2, "n": [3, 3, 3], "K": 3}"#);
    let out = run(&["measure", "--spec", spec.path().to_str().unwrap(), "--check", "separation", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    let rec = &rep.records[0];
    assert_eq!(rec.status, Status::Pass);
    assert!(rec.anchor.contains("squaresep"));
    assert_eq!(rec.values["min_separation"], "1/9");
}

#[test]
fn exhaustive_projection_counts_all_subsets() {
    let out = run(&["isoperim", "--projection-exhaustive", "3x3"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(rep.records[0].values["checks"], 512);
    assert_eq!(rep.records[0].values["violations"], 0);
}

#[test]
fn heis_net_is_byte_identical() {
    let a = run(&["heis", "net", "--levels", "2", "--seed", "7"]);
    let b = run(&["heis", "net", "--levels", "2", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let other = run(&["heis", "net", "--levels", "2", "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn thread_count_does_not_change_output() {
    let spec = spec_file(r#"{"d": 2, "n": [3, 9], "K": 2}"#);
    let sp = spec.path().to_str().unwrap();
    let args = ["connect", "--spec", sp, "--check", "upgrade", "--candidates", "100", "--count", "10"];
    let one = Command::new(env!("CARGO_BIN_EXE_sponge-lab")).args(args).env("SPONGELAB_THREADS", "1").output().unwrap();
    let two = run(&[&args[..], &["--threads", "2"]].concat());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn exit_codes() {
    let bad_json = spec_file("{not json");
    let even = spec_file(r#"{"d": 2, "n": [4], "K": 1}"#);
    let fat = spec_file(r#"{"d": 2, "n": [3, 9], "K": 2}"#);
    let code = |args: &[&str]| run(args).status.code();
    assert_eq!(code(&["measure", "--check", "volume"]), Some(2));
    assert_eq!(code(&["measure", "--spec", bad_json.path().to_str().unwrap(), "--check", "volume"]), Some(2));
    assert_eq!(code(&["build", "--spec", even.path().to_str().unwrap()]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["constants", "tau", "--q", "1"]), Some(2));
    assert_eq!(code(&["build", "--dim", "2", "--n", "3,3,3,3,3,3,3", "--max-tiles", "1000"]), Some(2));
    let fp = fat.path().to_str().unwrap();
    assert_eq!(code(&["connect", "--spec", fp, "--check", "quasiconvexity"]), Some(0));
    assert_eq!(code(&["connect", "--spec", fp, "--check", "quasiconvexity", "--bound", "1.5"]), Some(1));
    assert_eq!(code(&["constants", "tau", "--out", "/nonexistent-dir/x.json"]), Some(3));
}

#[test]
fn csv_rows_and_line_endings() {
    let out = run(&["measure", "--dim", "2", "--n", "3,5,7", "--check", "density", "--samples", "10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), CSV_HEADER.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let sups: Vec<f64> = rows
        .iter()
        .map(|r| {
            let v: serde_json::Value = serde_json::from_str(&r[3]).unwrap();
            v["sup_sN_f64"].as_f64().unwrap()
        })
        .collect();
    assert!(sups.windows(2).all(|w| w[1] < w[0]), "{sups:?}");
}

#[test]
fn empty_report_is_header_only_csv() {
    let bytes = render(&Report::new(vec![]), Format::Csv).unwrap();
    assert_eq!(String::from_utf8(bytes).unwrap(), "name,anchor,status,values,witness\n");
}

#[test]
fn json_round_trip() {
    let out = run(&["constants", "filling"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(render(&rep, Format::Json).unwrap(), out.stdout);
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let to_file = run(&["constants", "isoperimetric", "--out", path.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), run(&["constants", "isoperimetric"]).stdout);
}
