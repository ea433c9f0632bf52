// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tldn::cli::document::DnDocument;

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_tldn"))
            .args(args)
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    fn loadgen(&self, name: &str, n: usize, seed: u64) {
        self.loadgen_span(name, n, seed, "9.6e8");
    }

    fn loadgen_span(&self, name: &str, n: usize, seed: u64, span: &str) {
        self.ok(&[
            "loadgen",
            "--n",
            &n.to_string(),
            "--f0",
            "2.4e9",
            "--span",
            span,
            "--points",
            "201",
            "--seed",
            &seed.to_string(),
            "--coupling",
            "0.6",
            "--out",
            name,
        ]);
    }

    fn synthesize(&self, load: &str, dn: &str, extra: &[&str]) -> String {
        let mut args = vec!["synthesize", "--load", load, "--f0", "2.4e9", "--out", dn];
        args.extend_from_slice(extra);
        self.ok(&args)
    }
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn synthesize_verify_sweep_export() {
    let ws = Workspace::new();
    // ±18 % keeps every line clear of a half wavelength.
    ws.loadgen_span("load.s2p", 2, 3, "8.64e8");
    let table = ws.synthesize("load.s2p", "dn.json", &[]);
    assert!(table.starts_with("TL Branch"));
    assert!(table.contains("TL_1_1"));

    let doc = DnDocument::from_json(&read(&ws.path("dn.json"))).unwrap();
    assert_eq!(doc.n, 2);
    assert_eq!(doc.branches.len() + doc.pruned.len(), 10);
    assert!(doc
        .branches
        .iter()
        .all(|b| b.theta_deg == 135.0 || b.theta_deg == 225.0));

    let verify = ws.ok(&[
        "verify",
        "--load",
        "load.s2p",
        "--dn",
        "dn.json",
        "--include-pruned",
        "--threshold",
        "1e-8",
    ]);
    assert!(verify.contains("PASS"));

    ws.ok(&[
        "sweep",
        "--load",
        "load.s2p",
        "--dn",
        "dn.json",
        "--out",
        "comp.s2p",
        "--csv",
        "comp.csv",
        "--include-pruned",
    ]);
    let composite = tldn::touchstone::parse(read(&ws.path("comp.s2p")).as_bytes(), 2).unwrap();
    assert_eq!(composite.frequencies.len(), 201);
    assert!(composite.matrices[100].max_abs() < 1e-8);
    let csv = read(&ws.path("comp.csv"));
    let mut rows = csv.lines();
    assert_eq!(rows.next().unwrap().split(',').count(), 5);
    assert_eq!(rows.clone().count(), 201);
    assert!(rows.all(|r| r.split(',').count() == 5));

    let netlist = ws.ok(&["export", "--dn", "dn.json", "--format", "netlist"]);
    let elements: Vec<&str> = netlist.lines().filter(|l| l.starts_with("TL_")).collect();
    assert_eq!(elements.len(), doc.branches.len());
    assert!(netlist.trim_end().ends_with(".end"));
    for e in &elements {
        let fields: Vec<&str> = e.split_whitespace().collect();
        assert_eq!(fields.len(), 6);
        let nodes: Vec<usize> = fields[1..3].iter().map(|s| s.parse().unwrap()).collect();
        assert!(nodes.iter().all(|&k| k <= 4));
    }
    assert_eq!(
        netlist.lines().filter(|l| l.starts_with("* pruned")).count(),
        doc.pruned.len()
    );

    let csv = ws.ok(&["export", "--dn", "dn.json", "--format", "csv"]);
    assert_eq!(csv.lines().count(), 1 + doc.branches.len());
    for (line, b) in csv.lines().skip(1).zip(&doc.branches) {
        let z0: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(z0, b.z0_ohm);
    }
}

#[test]
fn annotated_sweep_adds_a_csv_column() {
    // At 0.8·f0 the 225° lines are half a wavelength long.
    let ws = Workspace::new();
    ws.loadgen("load.s2p", 2, 3);
    ws.synthesize("load.s2p", "dn.json", &["--z0-max", "1e12"]);
    let stdout = ws.ok(&[
        "sweep", "--load", "load.s2p", "--dn", "dn.json", "--out", "c.s2p", "--csv", "c.csv",
    ]);
    assert!(stdout.contains("perturbed"));
    let csv = read(&ws.path("c.csv"));
    assert!(csv.lines().next().unwrap().ends_with(",annotation"));
    assert!(csv.lines().all(|r| r.split(',').count() == 6));
    assert!(csv.lines().nth(1).unwrap().ends_with(",perturbed:1920000001.92"));
}

#[test]
fn three_port_design_has_twenty_one_lines() {
    let ws = Workspace::new();
    ws.loadgen("load.s3p", 3, 8);
    ws.synthesize("load.s3p", "dn.json", &["--z0-max", "1e12"]);
    let doc = DnDocument::from_json(&read(&ws.path("dn.json"))).unwrap();
    assert_eq!(doc.branches.len(), 21);
}

#[test]
fn outputs_are_deterministic() {
    let ws = Workspace::new();
    ws.loadgen("a.s2p", 2, 11);
    ws.loadgen("b.s2p", 2, 11);
    assert_eq!(read(&ws.path("a.s2p")), read(&ws.path("b.s2p")));
    let t1 = ws.synthesize("a.s2p", "a.json", &["--v", "random:5"]);
    let t2 = ws.synthesize("a.s2p", "b.json", &["--v", "random:5"]);
    assert_eq!(t1, t2);
    assert_eq!(read(&ws.path("a.json")), read(&ws.path("b.json")));
    ws.ok(&["sweep", "--load", "a.s2p", "--dn", "a.json", "--out", "s1.s2p"]);
    ws.ok(&["sweep", "--load", "a.s2p", "--dn", "a.json", "--out", "s2.s2p"]);
    assert_eq!(read(&ws.path("s1.s2p")), read(&ws.path("s2.s2p")));
}

#[test]
fn verify_failure_exit_code() {
    let ws = Workspace::new();
    ws.loadgen("load.s2p", 2, 3);
    ws.loadgen("other.s2p", 2, 4);
    ws.synthesize("load.s2p", "dn.json", &[]);
    let out = ws.run(&["verify", "--load", "other.s2p", "--dn", "dn.json"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn input_errors_exit_two_with_json() {
    let ws = Workspace::new();
    fs::write(ws.path("bad.s2p"), "# GHz S RI R 50\n1 0 0 0\n").unwrap();
    let out = ws.run(&["synthesize", "--load", "bad.s2p", "--f0", "1e9", "--out", "dn.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"], "input");
    assert!(err["message"].as_str().unwrap().contains("truncation"));

    let out = ws.run(&["synthesize", "--load", "missing.s2p", "--f0", "1e9", "--out", "dn.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = ws.run(&["synthesize", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    error_json(&out);
}

#[test]
fn design_frequency_off_grid_is_an_input_error() {
    let ws = Workspace::new();
    ws.loadgen("load.s2p", 2, 3);
    let out = ws.run(&["synthesize", "--load", "load.s2p", "--f0", "2.41e9", "--out", "dn.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["message"]
        .as_str()
        .unwrap()
        .contains("not on the load's grid"));
}

#[test]
fn singular_conversion_exits_three() {
    let ws = Workspace::new();
    fs::write(ws.path("open.s1p"), "# HZ S RI R 50\n1000000000 0 0\n").unwrap();
    let out = ws.run(&["synthesize", "--load", "open.s1p", "--f0", "1e9", "--out", "dn.json"]);
    assert_eq!(out.status.code(), Some(3));
    let err = error_json(&out);
    assert_eq!(err["error"], "synthesis");
    assert!(err["message"].as_str().unwrap().contains("free design parameter"));
    ws.ok(&[
        "synthesize",
        "--load",
        "open.s1p",
        "--f0",
        "1e9",
        "--out",
        "dn.json",
        "--v",
        "random:2",
    ]);
}

#[test]
fn malformed_documents_exit_four() {
    let ws = Workspace::new();
    ws.loadgen("load.s2p", 2, 3);
    ws.synthesize("load.s2p", "dn.json", &[]);
    let mut doc = DnDocument::from_json(&read(&ws.path("dn.json"))).unwrap();
    doc.branches[0].theta_deg = 400.0;
    fs::write(ws.path("bad.json"), doc.to_json()).unwrap();
    let out = ws.run(&["export", "--dn", "bad.json", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["error"], "validation");

    ws.loadgen("three.s3p", 3, 3);
    let out = ws.run(&["verify", "--load", "three.s3p", "--dn", "dn.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn custom_mode_from_a_file() {
    let ws = Workspace::new();
    ws.loadgen("load.s1p", 1, 6);
    fs::write(
        ws.path("a.json"),
        r#"[{"i":1,"j":1,"a":0.3},{"i":1,"j":2,"a":-0.4},{"i":2,"j":2,"a":0.5}]"#,
    )
    .unwrap();
    ws.synthesize(
        "load.s1p",
        "dn.json",
        &["--mode", "custom", "--a-file", "a.json", "--z0-max", "1e12"],
    );
    let doc = DnDocument::from_json(&read(&ws.path("dn.json"))).unwrap();
    assert_eq!(doc.mode, "custom");
    let b = doc.branches.iter().find(|b| (b.i, b.j) == (1, 2)).unwrap();
    assert!((b.theta_deg.to_radians().cos() + 0.4).abs() < 1e-12);
    let verify = ws.ok(&["verify", "--load", "load.s1p", "--dn", "dn.json", "--threshold", "1e-8"]);
    assert!(verify.contains("PASS"));

    let out = ws.run(&[
        "synthesize",
        "--load",
        "load.s1p",
        "--f0",
        "2.4e9",
        "--out",
        "x.json",
        "--mode",
        "custom",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn library_entry_point_matches_binary() {
    use clap::Parser;
    let ws = Workspace::new();
    ws.loadgen("load.s2p", 2, 3);
    ws.synthesize("load.s2p", "dn.json", &[]);
    let dn = ws.path("dn.json");
    let cli = tldn::cli::Cli::try_parse_from(["tldn", "export", "--dn", dn.to_str().unwrap(), "--format", "netlist"])
        .unwrap();
    let lib = tldn::cli::run(cli).unwrap();
    assert_eq!(lib.exit_code, 0);
    assert_eq!(
        lib.stdout,
        ws.ok(&["export", "--dn", dn.to_str().unwrap(), "--format", "netlist"])
    );
}
