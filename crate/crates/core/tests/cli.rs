//! The command-line binary end to end: files in a temporary directory, exit
//! codes and the documents it writes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpslab::cone::BidAskMatrix;
use cpslab::lab::doc::{from_json, read_json, write_json, CertificateDoc, LabeledVector, StartDoc, START_SCHEMA};
use cpslab::lab::{ExperimentReport, InstanceDocument, PriceSystemDoc};
use cpslab::rational::{int, rat};
use cpslab::{EventTree, Market, ModelFamily};

fn cpslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpslab")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, mode: &str, d: &str, depth: &str, seed: &str) -> PathBuf {
    let path = dir.join(name);
    let out = cpslab(&["gen", "--mode", mode, "--d", d, "--depth", depth, "--seed", seed, "-o", s(&path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

fn drop_instance(dir: &Path) -> PathBuf {
    let tree = EventTree::uniform(1, 2).unwrap();
    let bidask = [8, 2, 2].iter().map(|&r| BidAskMatrix::uniform(2, int(r)).unwrap()).collect();
    let models = ModelFamily::homogeneous(&tree, &[vec![rat(1, 2), rat(1, 2)]]);
    let market = Market::new(tree, bidask, models).unwrap();
    let path = dir.join("drop.json");
    write_json(&path, &InstanceDocument::from_market(&market, None)).unwrap();
    path
}

#[test]
fn validate_and_na2_on_generated_files() {
    let dir = tempfile::tempdir().unwrap();
    let mono = gen(dir.path(), "mono.json", "monotone", "3", "2", "5");
    let out = cpslab(&["validate", s(&mono)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("valid: 3 assets, horizon 2"));

    let out = cpslab(&["na2", s(&mono)]);
    assert_eq!((code(&out), stdout(&out).trim()), (0, "holds"));

    let planted = gen(dir.path(), "planted.json", "planted-arbitrage", "2", "2", "5");
    let out = cpslab(&["na2", s(&planted)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("fails at"));
    let out = cpslab(&["na2", s(&planted), "--json"]);
    let certs: Vec<CertificateDoc> = from_json(&stdout(&out)).unwrap();
    assert!(!certs.is_empty());
    assert!(certs.iter().all(|c| !c.strategy.is_empty()));
}

#[test]
fn pce_writes_a_price_system_and_reports_blocked_starts() {
    let dir = tempfile::tempdir().unwrap();
    let mono = gen(dir.path(), "mono.json", "monotone", "2", "2", "9");
    let ps_path = dir.path().join("ps.json");
    let out = cpslab(&["pce", s(&mono), "--time", "1", "--measure", "uniform", "-o", s(&ps_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc: PriceSystemDoc = read_json(&ps_path).unwrap();
    assert_eq!(doc.t, 1);

    let drop = drop_instance(dir.path());
    let y_path = dir.path().join("y.json");
    let start = StartDoc {
        schema: START_SCHEMA.into(),
        values: vec![LabeledVector {
            node: "/".into(),
            value: vec!["1".into(), "6".into()],
        }],
    };
    write_json(&y_path, &start).unwrap();
    let out = cpslab(&["pce", s(&drop), "--time", "0", "--y", s(&y_path)]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).starts_with("no extension at /"), "{}", stdout(&out));

    let out = cpslab(&["pce", s(&drop), "--time", "1"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn equiv_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch");
    let out = cpslab(&["gen", "--mode", "random", "--d", "2", "--depth", "2", "--seed", "3", "--count", "4", "-o", s(&batch)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut files: Vec<String> = std::fs::read_dir(&batch)
        .unwrap()
        .map(|e| e.unwrap().path().display().to_string())
        .collect();
    files.sort();
    files.push(drop_instance(dir.path()).display().to_string());
    let report_path = dir.path().join("report.json");
    let mut args = vec!["equiv", "--probes", "4", "--y-probes", "2", "--workers", "1", "-o", s(&report_path)];
    args.extend(files.iter().map(String::as_str));
    let out = cpslab(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("5 instances"));
    assert!(stdout(&out).contains("0 counterexamples"));

    let out = cpslab(&["report", s(&report_path)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("re-verify"));

    // A report flagging a counterexample exits with 3.
    let mut report: ExperimentReport = read_json(&report_path).unwrap();
    report.instances[0].counterexample = true;
    report.summary.counterexamples = 1;
    write_json(&report_path, &report).unwrap();
    assert_eq!(code(&cpslab(&["report", s(&report_path)])), 3);
}

#[test]
fn invalid_inputs_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "a.json", "random", "2", "1", "1");
    let mut doc: InstanceDocument = read_json(&path).unwrap();

    // A frictionless round trip at the root violates efficient friction.
    doc.nodes[0].bidask = vec![vec!["1".into(), "2".into()], vec!["1/2".into(), "1".into()]];
    write_json(&path, &doc).unwrap();
    let out = cpslab(&["validate", s(&path)]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("violation"));
    assert_eq!(code(&cpslab(&["na2", s(&path)])), 2);

    doc.nodes[0].kernels = vec![vec!["x".into(); doc.child_counts[0]]];
    write_json(&path, &doc).unwrap();
    let out = cpslab(&["validate", s(&path)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("node /"), "{}", stderr(&out));

    assert_eq!(code(&cpslab(&["validate", s(&dir.path().join("missing.json"))])), 1);
    assert_eq!(code(&cpslab(&["gen", "--mode", "sideways", "--d", "2", "--depth", "1", "-o", "x"])), 1);
    assert_eq!(code(&cpslab(&["frobnicate"])), 1);
    assert_eq!(code(&cpslab(&["--help"])), 0);
}
