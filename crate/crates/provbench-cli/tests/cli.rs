use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn provbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_provbench")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = provbench(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    stdout(&out)
}

#[test]
fn classify_prints_minimal_then_the_rest() {
    assert_eq!(ok(&["classify", "Ax0.(x0=x0)"]), "Pi1 (minimal); Sigma2 Pi2 Sigma3 Pi3\n");
    assert_eq!(ok(&["classify", "Ex0.Ax1.(x0<=x1)"]), "Sigma2 (minimal); Sigma3 Pi3\n");
}

#[test]
fn tc_and_skeleton() {
    assert_eq!(ok(&["tc", "--assume", "0=0", "0=0"]), "true\n");
    assert_eq!(ok(&["tc", "Ax0.(x0=x0)"]), "false\n");
    assert_eq!(ok(&["skeleton", "(Ax0.(x0=x0)&!0=1)"]), "(p1 & !p0)\np0 := 0=1\np1 := Ax0.(x0=x0)\n");
}

#[test]
fn run_then_read_rosser_and_eval_off_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let t = trace.to_str().unwrap();
    let summary = ok(&["run", "--machine", "E", "--theory", "incons", "--stages", "2000", "--p2-budget", "5000", "--out", t]);
    assert!(summary.starts_with("bell: 10;"), "{summary}");
    assert_eq!(ok(&["rosser", "--trace", t, "0=0"]), "True\n");
    assert_eq!(ok(&["rosser", "--trace", t, "!0=0"]), "False\n");
    assert_eq!(ok(&["rosser", "--plain", "--trace", t, "!0=0"]), "True\n");
    assert_eq!(ok(&["eval", "--trace", t, "--machine", "E", "Ex0.OUT[E](x0,#(0=0))"]), "True\n");
}

#[test]
fn exit_codes() {
    assert_eq!(provbench(&[]).status.code(), Some(2));
    assert_eq!(provbench(&["classify"]).status.code(), Some(2));
    assert_eq!(provbench(&["tc", "--frobnicate", "0=0"]).status.code(), Some(2));
    let bad = provbench(&["classify", "0="]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
    assert_eq!(provbench(&["rosser", "--trace", "/nonexistent/t.jsonl", "0=0"]).status.code(), Some(1));
    assert_eq!(provbench(&["conserve", "--gamma", "Ax0.(x0=x0)", "--phi", "0=0", "--class", "Pi1"]).status.code(), Some(1));
    assert_eq!(provbench(&["run", "--machine", "Q", "--theory", "sound", "--out", "/dev/null"]).status.code(), Some(1));
}

#[test]
fn conserve_emits_jsonl_and_a_verdict() {
    let out = ok(&["conserve", "--gamma", "Ex0.(x0=2)", "--phi", "0=0", "--phi", "1=1", "--class", "Sigma1"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(*lines.last().unwrap(), "verdict: valid (24 steps)");
    for (i, line) in lines[..lines.len() - 1].iter().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["index"], i);
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["index", "rule", "premises", "detail", "subset", "sentence"]);
    }
    let scen = ok(&["conserve", "--scenario", "G-psi:Pi1"]);
    assert!(scen.ends_with("verdict: valid (7 steps)\n"), "{scen}");
}

#[test]
fn diag_lists_and_registers_templates() {
    let listing = ok(&["diag"]);
    assert!(listing.lines().any(|l| l.starts_with("FP1_phi : Pi1 := ")));
    let one = ok(&["diag", "--name", "G_beta"]);
    assert_eq!(one.lines().count(), 1);
    assert_eq!(provbench(&["diag", "--name", "nope"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("liar.tpl");
    fs::write(&file, "# a liar over the proof enumerator\nLiar Pi1 x1 !PR[T](x1)\n").unwrap();
    let out = ok(&["diag", "--template", file.to_str().unwrap()]);
    assert!(out.starts_with("Liar : Pi1 := !PR[T]("), "{out}");
}

#[test]
fn theory_files_drive_runs() {
    let dir = tempfile::tempdir().unwrap();
    let theory = dir.path().join("scripted.theory");
    fs::write(&theory, "0=0\n(0=0->1=1)\nat_stage 3 inject 0=1\n").unwrap();
    let out = dir.path().join("t.jsonl");
    let summary = ok(&["run", "--machine", "E", "--theory", theory.to_str().unwrap(), "--stages", "50", "--p2-budget", "30", "--out", out.to_str().unwrap()]);
    assert!(summary.starts_with("bell: 3;"), "{summary}");
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let produce = |tag: &str| {
        let trace = dir.path().join(format!("{tag}.jsonl"));
        let deriv = dir.path().join(format!("{tag}.derivation.jsonl"));
        ok(&["run", "--machine", "G", "--theory", "incons", "--stages", "500", "--p2-budget", "400", "--out", trace.to_str().unwrap()]);
        ok(&["conserve", "--scenario", "FP1-C1", "--out", deriv.to_str().unwrap()]);
        (fs::read(&trace).unwrap(), fs::read(&deriv).unwrap())
    };
    assert_eq!(produce("a"), produce("b"));
    assert!(Path::new(&dir.path().join("a.jsonl")).exists());
}

#[test]
fn oracle_reports_no_mismatches() {
    let out = ok(&["oracle"]);
    assert!(out.contains(", 0 mismatches"), "{out}");
    assert!(out.contains("(incons): 10"));
    assert!(!out.contains("valid-at-desk=false"));
}
