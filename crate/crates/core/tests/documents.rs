//! Document round trips, report determinism and self-verification.

use cpslab::cps::{build_pce, ExtensionRequest};
use cpslab::lab::doc::{from_json, read_json, to_json, write_json, CertificateDoc, Metadata};
use cpslab::lab::gen::mixed_batch;
use cpslab::lab::{
    generate, run_equivalence, verify_report, EquivConfig, ExperimentReport, GeneratorConfig, InstanceDocument, Mode,
    PriceSystemDoc,
};
use cpslab::na2::{arbitrage_to_global, na2_global};
use proptest::prelude::*;

fn doc_for(cfg: &GeneratorConfig) -> InstanceDocument {
    let market = generate(cfg).unwrap();
    InstanceDocument::from_market(&market, Some(Metadata { generator: cfg.clone() }))
}

fn small_batch(n: u64, seed: u64) -> Vec<(String, InstanceDocument)> {
    mixed_batch(n, seed)
        .iter()
        .enumerate()
        .map(|(i, c)| (format!("i{i}"), doc_for(c)))
        .collect()
}

fn quick() -> EquivConfig {
    EquivConfig {
        probes: 3,
        y_probes: 2,
        strategy_trials: 5,
        easy_zetas: 3,
        seed: 11,
        ..EquivConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn generated_instances_round_trip(seed in any::<u64>(), d in 2usize..=4, depth in 1usize..=3, k in 0u8..3) {
        let mode = [Mode::Random, Mode::Monotone, Mode::PlantedArbitrage][usize::from(k)];
        let cfg = GeneratorConfig::new(mode, d, depth, seed);
        let doc = doc_for(&cfg);
        let text = to_json(&doc);
        let back: InstanceDocument = from_json(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(to_json(&back), text);
        let (a, b) = (generate(&cfg).unwrap(), back.to_market().unwrap());
        prop_assert_eq!(a.bidask_process(), b.bidask_process());
        prop_assert_eq!(a.models(), b.models());
        prop_assert_eq!(a.tree(), b.tree());
    }
}

#[test]
fn report_round_trips_and_reverifies() {
    let report = run_equivalence(&small_batch(8, 3), &quick(), Some(1));
    assert_eq!(report.summary.counterexamples, 0);
    let text = to_json(&report);
    let back: ExperimentReport = from_json(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(to_json(&back), text);
    assert!(verify_report(&back).is_empty());
}

#[test]
fn report_is_deterministic_across_worker_counts() {
    let batch = small_batch(6, 9);
    let one = run_equivalence(&batch, &quick(), Some(1)).without_timing();
    let two = run_equivalence(&batch, &quick(), Some(2)).without_timing();
    assert_eq!(to_json(&one), to_json(&two));
}

#[test]
fn tampered_reports_are_caught() {
    let report = run_equivalence(&small_batch(12, 5), &quick(), Some(1));
    let mut holds_tampered = report.clone();
    let r = holds_tampered.instances.iter_mut().find(|r| r.verdict == "holds").unwrap();
    let z = r.price_systems[0].nodes.iter_mut().find(|n| n.z.is_some()).unwrap();
    z.z.as_mut().unwrap()[0] = "7".into();
    assert!(!verify_report(&holds_tampered).is_empty());

    let mut fails_tampered = report.clone();
    let r = fails_tampered.instances.iter_mut().find(|r| r.verdict == "fails").unwrap();
    r.certificates[0].zeta = r.certificates[0].zeta.iter().map(|_| "1".to_string()).collect();
    assert!(!verify_report(&fails_tampered).is_empty());

    let mut summary_tampered = report;
    summary_tampered.summary.holds += 1;
    assert!(!verify_report(&summary_tampered).is_empty());
}

#[test]
fn price_system_and_certificate_documents_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate(&GeneratorConfig::new(Mode::Monotone, 3, 2, 41)).unwrap();
    let req = ExtensionRequest::constant(&m, 0, m.uniform_measure(), m.dual(m.tree().root()).pick_interior_point().unwrap());
    let ps = build_pce(&m, &req).unwrap();
    let path = dir.path().join("ps.json");
    write_json(&path, &PriceSystemDoc::new(&m, &req, &ps)).unwrap();
    let doc: PriceSystemDoc = read_json(&path).unwrap();
    let (req2, ps2) = doc.to_parts(&m).unwrap();
    assert_eq!(ps2, ps);
    assert_eq!(req2.y, req.y);

    let m = generate(&GeneratorConfig::new(Mode::PlantedArbitrage, 3, 2, 41)).unwrap();
    let cert = na2_global(&m).failing.remove(0);
    let strategy = arbitrage_to_global(&m, &cert).unwrap();
    let path = dir.path().join("cert.json");
    write_json(&path, &CertificateDoc::new(&m, &cert, Some(&strategy))).unwrap();
    let doc: CertificateDoc = read_json(&path).unwrap();
    assert_eq!(doc.certificate(&m).unwrap(), cert);
    assert_eq!(doc.strategy(&m).unwrap(), strategy);
}

#[test]
fn bad_rationals_name_the_node() {
    let cfg = GeneratorConfig::new(Mode::Random, 2, 1, 1);
    let mut doc = doc_for(&cfg);
    doc.nodes[1].bidask[0][1] = "2/0".into();
    let err = doc.to_market().unwrap_err().to_string();
    assert!(err.starts_with("node /0:"), "{err}");
    let text = to_json(&doc_for(&cfg)).replacen("\"assets\": 2", "\"assets\": \"two\"", 1);
    let err = from_json::<InstanceDocument>(&text).unwrap_err().to_string();
    assert!(err.starts_with("assets"), "{err}");
}
