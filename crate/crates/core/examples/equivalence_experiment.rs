//! Generates a seeded mixed batch of markets and runs the equivalence
//! experiment on it: every instance either admits verified price systems for
//! all probes or carries a verified arbitrage with a non-extendable start price.
//!
//! Usage: `cargo run --release --example equivalence_experiment [count] [seed]`

use std::time::Instant;

use cpslab::lab::doc::Metadata;
use cpslab::lab::gen::mixed_batch;
use cpslab::lab::{generate, run_equivalence, verify_report, EquivConfig, InstanceDocument};

fn main() {
    let mut args = std::env::args().skip(1);
    let count: u64 = args.next().map(|s| s.parse().expect("count")).unwrap_or(60);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(2024);

    let instances: Vec<(String, InstanceDocument)> = mixed_batch(count, seed)
        .into_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let name = format!("{i:03} {} d={} T={}", cfg.mode, cfg.d, cfg.depth);
            let market = generate(&cfg).expect("valid config");
            (name, InstanceDocument::from_market(&market, Some(Metadata { generator: cfg })))
        })
        .collect();

    let started = Instant::now();
    let report = run_equivalence(&instances, &EquivConfig::default(), None);
    let s = &report.summary;
    println!(
        "{} instances in {:.1?}: {} holds, {} fails, {} counterexamples",
        s.instances,
        started.elapsed(),
        s.holds,
        s.fails,
        s.counterexamples
    );
    let slowest = report.instances.iter().max_by_key(|r| r.elapsed_us).expect("nonempty batch");
    println!("slowest: {} ({} ms)", slowest.name, slowest.elapsed_us / 1000);
    for r in report.instances.iter().filter(|r| r.counterexample) {
        println!("COUNTEREXAMPLE {}", r.name);
        for c in r.checks.iter().filter(|c| !c.passed) {
            println!("  {}: {}", c.name, c.detail);
        }
    }
    let problems = verify_report(&report);
    println!("re-verification problems: {}", problems.len());
}
