//! End-to-end checks of the binary: output values, formats, exit codes.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn progeny(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_progeny"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn progeny_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_progeny"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_temp(content: &str) -> tempfile::NamedTempFile {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(content.as_bytes()).unwrap();
    file
}

#[test]
fn eval_reports_the_chain_total() {
    let file = write_temp(r#"{"n":10,"parent":[1,2,3,null,0,0,0,1,1,2]}"#);
    let out = progeny(&["eval", "mf", file.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("total 0.6609640474436812"), "got: {text}");
}

#[test]
fn eval_reads_stdin_and_emits_deterministic_json() {
    let run = || {
        let mut child = Command::new(env!("CARGO_BIN_EXE_progeny"))
            .args(["eval", "mb", "-", "--format", "json"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        child
            .stdin
            .take()
            .unwrap()
            .write_all(b"n=3\n0 1\n1 2\n")
            .unwrap();
        child.wait_with_output().unwrap()
    };
    let first = run();
    let second = run();
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let text = stdout(&first);
    assert!(text.contains("\"total\":1.0000000000000000e0"), "got: {text}");
}

#[test]
fn eval_rejects_unknown_mechanisms_with_usage_exit() {
    let file = write_temp(r#"{"n":1,"parent":[null]}"#);
    let out = progeny(&["eval", "mz", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_reports_numeric_failure_on_epsilon_underflow() {
    let family = progeny(&["family", "star:60"]);
    let file = write_temp(&stdout(&family));
    let out = progeny(&["eval", "meps:0.000001", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn audit_passes_for_the_exact_mechanism() {
    let out = progeny(&[
        "audit", "mb", "--max-n", "4", "--checks", "ic,mass,quality", "--bound", "0.3333333",
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
}

#[test]
fn audit_flags_the_interval_share_reference_on_its_witness() {
    // the three-tree worked example; the defect sits at the vertex whose
    // edge removal lowers the midpoint
    let trees = r#"{"n":27,"parent":[1,2,3,null,5,6,7,null,null,0,1,1,1,2,3,5,5,6,6,7,8,8,8,8,8,8,8]}"#;
    let file = write_temp(trees);
    let out = progeny(&[
        "audit", "mprime", "--forest", file.path().to_str().unwrap(), "--checks", "ic",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("vertex 1"), "witness must be vertex 1");
}

#[test]
fn audit_fails_the_empty_mechanism_on_quality() {
    let out = progeny(&[
        "audit", "empty", "--checks", "quality", "--bound", "0.01", "--max-n", "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn audit_requires_a_bound_for_quality_checks() {
    let out = progeny(&["audit", "mf", "--checks", "quality", "--max-n", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn audit_json_is_byte_deterministic_across_job_counts() {
    let run = |jobs: &str| {
        progeny(&[
            "audit", "mf", "--max-n", "4", "--checks", "ic,mass,fairness", "--jobs", jobs,
            "--format", "json",
        ])
    };
    let seq = run("1");
    let par = run("4");
    assert!(seq.status.success());
    assert_eq!(seq.stdout, par.stdout);
}

#[test]
fn enumerate_counts_and_dedups() {
    let out = progeny(&["enumerate", "3", "--count-only"]);
    assert_eq!(stdout(&out).trim(), "16");
    let out = progeny(&["enumerate", "3", "--count-only", "--dedup"]);
    assert_eq!(stdout(&out).trim(), "4");
    let out = progeny(&["enumerate", "2"]);
    assert_eq!(
        stdout(&out),
        "{\"n\":2,\"parent\":[null,null]}\n{\"n\":2,\"parent\":[null,0]}\n{\"n\":2,\"parent\":[1,null]}\n"
    );
}

#[test]
fn enumerate_honors_the_cap_and_its_override() {
    let out = progeny(&["enumerate", "8", "--count-only"]);
    assert_eq!(out.status.code(), Some(2));
    let out = progeny_env(&["enumerate", "8", "--count-only"], "PROGENY_MAX_N", "8");
    assert_eq!(stdout(&out).trim(), "4782969");
}

#[test]
fn family_builds_the_documented_shapes() {
    let out = progeny(&["family", "star:1"]);
    assert_eq!(stdout(&out).trim(), r#"{"n":1,"parent":[null]}"#);

    let out = progeny(&["family", "upper-pair:8", "--connected"]);
    assert_eq!(
        stdout(&out).trim(),
        r#"{"n":8,"parent":[null,0,0,0,0,1,1,1]}"#
    );

    let out = progeny(&["family", "star-path:20,20,10,10", "--extras", "2"]);
    let forest: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(forest["n"], 62);

    let out = progeny(&["family", "overpay:10,19"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_supports_generator_files_and_symmetrization() {
    let table = write_temp("[1.0, 1.0, 1.0]");
    let forest = write_temp(r#"{"n":3,"parent":[null,null,null]}"#);
    let spec = format!("fg:{}", table.path().display());
    let out = progeny(&["eval", &spec, forest.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("total 1.0000000000000000"));

    let pair = write_temp(r#"{"n":2,"parent":[null,null]}"#);
    let out = progeny(&["eval", "sym:mf", pair.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.matches("0.2500000000000000").count(), 2, "got: {text}");
}

#[test]
fn examples_pass() {
    let out = progeny(&["examples"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS"));
}

#[test]
fn demo_upper_bound_stays_under_four_fifths() {
    for mech in ["mf", "mb"] {
        let out = progeny(&["demo", "upper-bound", mech, "--n", "8"]);
        assert!(out.status.success(), "{mech}: {}", stdout(&out));
    }
}

#[test]
fn demo_impossibility_confirms_overdistribution() {
    let out = progeny(&["demo", "impossibility"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("over-distribution confirmed"), "got: {text}");
    assert!(text.contains("1.165833697244405"), "got: {text}");
}

#[test]
fn demo_impossibility_reports_unmet_hypotheses() {
    let out = progeny(&["demo", "impossibility", "--generator", "1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("hypotheses unmet"));
}
