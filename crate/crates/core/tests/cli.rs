use std::path::Path;
use std::process::{Command, Output};

use hardy_kernel::report::{from_json, CSV_HEADER};
use hardy_kernel::spectral::Verdict;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy-kernel")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn file_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn reference_triple_verifies() {
    let out = run(&["verify", "--n", "3", "--s", "1", "--gamma", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(r.triples.len(), 1);
    assert_eq!(r.triples[0].verdict, Verdict::VerifiedDim1);
    assert!(r.triples[0].timing.is_none());
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["verify", "--n", "2", "--s", "1", "--gamma", "0"]), 3);
    assert_eq!(code(&["verify", "--n", "3", "--s", "0", "--gamma", "0"]), 3);
    assert_eq!(code(&["verify", "--n", "3", "--s", "1", "--gamma", "0.25"]), 3);
    assert_eq!(code(&["verify", "--n", "3", "--s", "1"]), 3);
    assert_eq!(code(&["verify", "--bogus"]), 3);
    assert_eq!(code(&["sweep", "--n", "3", "--s", "1", "--gamma-fractions", "0", "--jobs", "0"]), 3);
    // −0.75 falls between the zero band and the separation: undecidable.
    assert_eq!(code(&["verify", "--n", "3", "--s", "1", "--gamma", "0", "--zero-tol", "0.5", "--separation", "0.8"]), 2);
    assert_eq!(code(&["verify", "--n", "3", "--s", "0", "--gamma", "0", "--boundary"]), 0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# reference triple\nn = 3\ns = 1\ngamma = 0\nzero-tol = 1e-4\nmodes = 4\n").unwrap();

    let from_file = run(&["verify", "--config", file_arg(&cfg)]);
    assert_eq!(from_file.status.code(), Some(0));
    let r = from_json(&String::from_utf8(from_file.stdout).unwrap()).unwrap();
    assert_eq!(r.config.solver.zero_tol, 1e-4);
    assert_eq!(r.config.solver.k_max, 4);

    let flagged = run(&["verify", "--config", file_arg(&cfg), "--zero-tol", "2e-5"]);
    let r = from_json(&String::from_utf8(flagged.stdout).unwrap()).unwrap();
    assert_eq!(r.config.solver.zero_tol, 2e-5);
    assert_eq!(r.config.solver.k_max, 4);

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "n 3\n").unwrap();
    assert_eq!(code(&["verify", "--config", file_arg(&bad)]), 3);
    assert_eq!(code(&["verify", "--config", file_arg(&dir.path().join("missing.cfg"))]), 3);
}

#[test]
fn saved_report_converts_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("sweep.json");
    let sweep = run(&["sweep", "--n", "3,4", "--s", "1", "--gamma-fractions", "0", "--out", file_arg(&json)]);
    assert_eq!(sweep.status.code(), Some(0));
    assert!(sweep.stdout.is_empty());

    let csv = run(&["report", "--input", file_arg(&json), "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(0));
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER.join(",").as_str()));
    assert!(lines.all(|l| l.ends_with(",verified_dim_1")));

    let unwritable = dir.path().join("missing").join("out.json");
    assert_eq!(code(&["verify", "--n", "3", "--s", "1", "--gamma", "0", "--out", file_arg(&unwritable)]), 3);
}

#[test]
fn profiles_have_one_row_per_node() {
    let out = run(&["report", "--profiles", "--n", "3", "--s", "1", "--gamma", "0", "--T", "20", "--h", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,u_hat,v,z_hat,phi_0,phi_1"));
    assert_eq!(lines.count(), 3999);
}
