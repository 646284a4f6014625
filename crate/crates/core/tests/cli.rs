//! End-to-end tests of the `fixcheck` binary: exit codes, report text, and
//! file outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixcheck() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fixcheck"))
}

fn solver_path() -> &'static str {
    env!("CARGO_BIN_EXE_fixcheck-solver")
}

fn write_spec(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn single_pole(dir: &Path) -> PathBuf {
    write_spec(
        dir,
        "single_pole.spec",
        "name = \"single pole\"\n\
         a = [\"-0.5\"]\n\
         b = [\"1\"]\n\
         input_range = [\"-1\", \"1\"]\n\
         [format]\n\
         int_bits = 2\n\
         frac_bits = 4\n",
    )
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn overflow_violation_exit_code_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let spec = single_pole(dir.path());
    let out = fixcheck()
        .args(["overflow", spec.to_str().unwrap(), "--bound", "6", "--engine", "exhaustive"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout(&out));
    let text = stdout(&out);
    for v in ["1.5", "1.75", "1.875", "1.9375", "VIOLATION", "subtractor a[1]"] {
        assert!(text.contains(v), "missing {v:?} in report:\n{text}");
    }
}

#[test]
fn overflow_via_smt_engine() {
    let dir = tempfile::tempdir().unwrap();
    let spec = single_pole(dir.path());
    let out = fixcheck()
        .args([
            "overflow",
            spec.to_str().unwrap(),
            "--bound",
            "6",
            "--engine",
            "smt",
            "--solver-cmd",
            solver_path(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("VIOLATION"));
}

#[test]
fn limitcycle_report_shows_the_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "pos.spec",
        "a = [\"0.5\"]\nb = [\"1\"]\ninput_range = [\"-1\", \"1\"]\n\
         [format]\nint_bits = 2\nfrac_bits = 4\n",
    );
    let out = fixcheck()
        .args(["limitcycle", spec.to_str().unwrap(), "--bound", "6"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("0.0625"), "report:\n{text}");
    assert!(text.contains("-0.0625"), "report:\n{text}");
    assert!(text.contains("period"), "report:\n{text}");
}

#[test]
fn verified_and_unknown_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "wide.spec",
        "a = [\"-0.5\"]\nb = [\"1\"]\ninput_range = [\"-1\", \"1\"]\n\
         [format]\nint_bits = 3\nfrac_bits = 4\n",
    );
    // small bound: full enumeration fits, no violation in the wider format
    let out = fixcheck()
        .args(["overflow", spec.to_str().unwrap(), "--bound", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("VERIFIED"));
    // tiny budget at a deep bound: enumeration gives up
    let out = fixcheck()
        .args(["overflow", spec.to_str().unwrap(), "--bound", "6", "--budget", "1000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("UNKNOWN"));
}

#[test]
fn timing_subcommand_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = single_pole(dir.path());
    let out = fixcheck()
        .args([
            "timing",
            spec.to_str().unwrap(),
            "--clock-hz",
            "16000000",
            "--sample-rate-hz",
            "48000",
            "--cycle-table",
            "msp430g2231",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("VERIFIED"));

    // 32-tap FIR misses the deadline
    let coeffs: Vec<String> = std::iter::repeat("\"0.03125\"".to_string()).take(32).collect();
    let fir = write_spec(
        dir.path(),
        "fir32.spec",
        &format!(
            "b = [{}]\ninput_range = [\"-1\", \"1\"]\n[format]\nint_bits = 2\nfrac_bits = 8\n",
            coeffs.join(", ")
        ),
    );
    let out = fixcheck()
        .args([
            "timing",
            fir.to_str().unwrap(),
            "--clock-hz",
            "16000000",
            "--sample-rate-hz",
            "48000",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("1120"), "report:\n{text}");
    assert!(text.contains("70.000 us"), "report:\n{text}");
}

#[test]
fn usage_errors_exit_3() {
    let out = fixcheck().args(["limitcycle", "missing.spec"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = fixcheck().args(["bogus-subcommand"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = fixcheck().output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = fixcheck().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn emit_smt_and_trace_out_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = single_pole(dir.path());
    let smt_path = dir.path().join("unrolled.smt2");
    let csv_path = dir.path().join("trace.csv");
    let out = fixcheck()
        .args([
            "overflow",
            spec.to_str().unwrap(),
            "--bound",
            "6",
            "--emit-smt",
            smt_path.to_str().unwrap(),
            "--trace-out",
            csv_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout(&out));
    let smt = std::fs::read_to_string(&smt_path).unwrap();
    assert!(smt.contains("(set-logic QF_BV)"));
    assert!(smt.contains("(check-sat)"));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("n,x,y_bin,y_dec,op_violation\n"), "csv:\n{csv}");
    assert!(csv.contains("subtractor a[1]"), "csv:\n{csv}");

    // the emitted script is solvable by the bundled solver
    let solved = Command::new("/bin/sh")
        .arg("-c")
        .arg(format!("{} < {}", solver_path(), smt_path.to_str().unwrap()))
        .output()
        .unwrap();
    assert!(
        String::from_utf8_lossy(&solved.stdout).starts_with("sat"),
        "solver said: {}",
        String::from_utf8_lossy(&solved.stdout)
    );
}
