//! The equivalence experiment: on each instance, either every probe request
//! extends to a verified price system (no-arbitrage holds) or every failing
//! node yields a verified arbitrage and a start price that cannot be extended.
//! Anything else is recorded as a counterexample.

use std::collections::HashMap;
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cps::{easy_direction_check, theta_membership, verify_pce, ExtensionRequest, OneStep, PceBuilder, PceError};
use crate::na2::{arbitrage_to_global, na2_global, na2_local, na2_local_primal, verify_global_certificate, ArbitrageCertificate, Strategy};
use crate::rational::{add, format_rat, format_vec, int, is_zero_vec, parse_vec, primitive_integer, scale, zeros, Rat};
use crate::tree::{Market, NodeId, TreeMeasure};

use super::doc::{
    obstruction_kind, obstruction_name, CertificateDoc, Check, ExperimentReport, InstanceDocument, InstanceReport, PriceSystemDoc,
    ProbeStats, ReportSettings, Summary, WitnessDoc, REPORT_SCHEMA,
};
use super::gen::batch_seed;

/// Products with more combinations than this are sampled even in exhaustive mode.
pub const EXHAUSTIVE_CAP: usize = 4096;
const MAX_HALVINGS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivConfig {
    /// Extreme-kernel product measures per start time.
    pub probes: usize,
    /// Random interior start maps per start time.
    pub y_probes: usize,
    pub exhaustive: bool,
    pub seed: u64,
    pub strategy_trials: usize,
    /// Random solvent positions per built price system.
    pub easy_zetas: usize,
}

impl Default for EquivConfig {
    fn default() -> Self {
        Self {
            probes: 20,
            y_probes: 5,
            exhaustive: false,
            seed: 0,
            strategy_trials: 20,
            easy_zetas: 10,
        }
    }
}

/// Runs every instance (in parallel on `workers` threads, or rayon's default)
/// and assembles the report in input order.
pub fn run_equivalence(instances: &[(String, InstanceDocument)], cfg: &EquivConfig, workers: Option<usize>) -> ExperimentReport {
    let work = || {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, (name, doc))| run_instance(i as u64, name, doc, cfg))
            .collect::<Vec<_>>()
    };
    let reports = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    };
    let summary = Summary {
        instances: reports.len(),
        holds: reports.iter().filter(|r| r.verdict == "holds").count(),
        fails: reports.iter().filter(|r| r.verdict == "fails").count(),
        invalid: reports.iter().filter(|r| r.verdict == "invalid").count(),
        counterexamples: reports.iter().filter(|r| r.counterexample).count(),
    };
    ExperimentReport {
        schema: REPORT_SCHEMA.to_string(),
        settings: ReportSettings {
            probes: cfg.probes,
            y_probes: cfg.y_probes,
            exhaustive: cfg.exhaustive,
            seed: cfg.seed,
        },
        summary,
        instances: reports,
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn record(&mut self, name: &str, passed: bool, detail: String) {
        self.0.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    fn all_passed(&self) -> bool {
        self.0.iter().all(|c| c.passed)
    }
}

/// Per-instance caches of LP and double-description results.
struct Instance<'a> {
    market: &'a Market,
    builder: PceBuilder<'a>,
    interior: HashMap<NodeId, Vec<Rat>>,
    lambda_rays: HashMap<NodeId, Vec<Vec<Rat>>>,
    rng: ChaCha8Rng,
}

impl<'a> Instance<'a> {
    fn interior_point(&mut self, id: NodeId) -> Vec<Rat> {
        let market = self.market;
        self.interior
            .entry(id)
            .or_insert_with(|| {
                market
                    .dual(id)
                    .pick_interior_point()
                    .expect("validated nodes have interior dual points")
            })
            .clone()
    }

    /// Random nonnegative combination of the dual rays, pushed inside by the
    /// margin-LP point.
    fn random_interior(&mut self, id: NodeId) -> Vec<Rat> {
        let mut y = self.interior_point(id);
        for r in self.market.cones(id).dual_rays() {
            let a = int(self.rng.random_range(0..=4));
            y = add(&y, &scale(r, &a));
        }
        y
    }

    fn lambda_generators(&mut self, id: NodeId) -> Vec<Vec<Rat>> {
        let market = self.market;
        self.lambda_rays
            .entry(id)
            .or_insert_with(|| {
                market
                    .support_cone(id)
                    .and_then(|c| Ok(c.extreme_rays()?))
                    .expect("support cones of validated nodes are pointed")
            })
            .clone()
    }

    fn random_combination(&mut self, gens: &[Vec<Rat>]) -> Vec<Rat> {
        let mut v = zeros(self.market.assets());
        for g in gens {
            let a = int(self.rng.random_range(0..=3));
            v = add(&v, &scale(g, &a));
        }
        v
    }
}

pub fn run_instance(index: u64, name: &str, doc: &InstanceDocument, cfg: &EquivConfig) -> InstanceReport {
    let started = Instant::now();
    let mut report = InstanceReport {
        name: name.to_string(),
        instance: doc.clone(),
        verdict: "invalid".into(),
        failing_nodes: Vec::new(),
        certificates: Vec::new(),
        price_systems: Vec::new(),
        probes: ProbeStats::default(),
        checks: Vec::new(),
        counterexample: false,
        elapsed_us: 0,
    };
    let mut checks = Checks(Vec::new());
    let market = match doc.to_market() {
        Ok(m) => m,
        Err(e) => {
            checks.record("instance parses", false, e.to_string());
            report.checks = checks.0;
            return report;
        }
    };
    let validation = market.validate(doc.declared_bound().ok().flatten().as_ref());
    if !validation.is_valid() {
        let detail = validation.violations.iter().map(|i| i.message.clone()).collect::<Vec<_>>().join("; ");
        checks.record("instance validates", false, detail);
        report.checks = checks.0;
        return report;
    }

    let mut inst = Instance {
        market: &market,
        builder: PceBuilder::new(&market),
        interior: HashMap::new(),
        lambda_rays: HashMap::new(),
        rng: ChaCha8Rng::seed_from_u64(batch_seed(cfg.seed, index)),
    };

    let verdict = na2_global(&market);
    report.failing_nodes = verdict.failing.iter().map(|c| market.label(c.node)).collect();

    let mut disagreements = Vec::new();
    for id in market.tree().non_terminal() {
        if market.is_polar(id) {
            continue;
        }
        let dual = na2_local(&market, id).expect("non-polar").holds();
        let primal = na2_local_primal(&market, id).expect("non-polar");
        if dual != primal {
            disagreements.push(market.label(id));
        }
    }
    checks.record("dual and primal local tests agree", disagreements.is_empty(), disagreements.join(", "));

    if verdict.holds {
        report.verdict = "holds".into();
        holds_branch(&mut inst, cfg, &mut report, &mut checks);
    } else {
        report.verdict = "fails".into();
        fails_branch(&mut inst, &verdict.failing, &mut report, &mut checks);
    }

    report.counterexample = !checks.all_passed();
    report.checks = checks.0;
    report.elapsed_us = started.elapsed().as_micros() as u64;
    report
}

/// Extreme-kernel product measures: all of them when `exhaustive` and the
/// product is small, otherwise a deduplicated random sample.
fn probe_measures(inst: &mut Instance, cfg: &EquivConfig) -> Vec<TreeMeasure> {
    let market = inst.market;
    let tree = market.tree();
    let counts: Vec<usize> = tree.ids().map(|id| market.models().extremes(id).len().max(1)).collect();
    let total = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
    if cfg.exhaustive && total.is_some_and(|t| t <= EXHAUSTIVE_CAP) {
        let total = total.unwrap_or(0);
        return (0..total)
            .map(|mut code| {
                let choice: Vec<usize> = counts
                    .iter()
                    .map(|&c| {
                        let pick = code % c;
                        code /= c;
                        pick
                    })
                    .collect();
                market.extreme_measure(&choice)
            })
            .collect();
    }
    let mut out: Vec<TreeMeasure> = Vec::new();
    let mut tries = 0;
    while out.len() < cfg.probes && tries < cfg.probes * 4 {
        tries += 1;
        let choice: Vec<usize> = counts.iter().map(|&c| inst.rng.random_range(0..c)).collect();
        let m = market.extreme_measure(&choice);
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

fn holds_branch(inst: &mut Instance, cfg: &EquivConfig, report: &mut InstanceReport, checks: &mut Checks) {
    let market = inst.market;
    let tree = market.tree();
    let mut failures: Vec<String> = Vec::new();
    let mut unverified: Vec<String> = Vec::new();
    let mut easy_failures: Vec<String> = Vec::new();
    let mut stats = ProbeStats::default();

    for t in 0..tree.horizon() {
        let measures = probe_measures(inst, cfg);
        stats.measures += measures.len();
        let start_nodes: Vec<NodeId> = tree.nodes_at(t).into_iter().filter(|&id| !market.is_polar(id)).collect();
        let maps: Vec<Vec<Option<Vec<Rat>>>> = (0..cfg.y_probes)
            .map(|_| {
                let mut y = vec![None; tree.len()];
                for &id in &start_nodes {
                    y[id.0] = Some(inst.random_interior(id));
                }
                y
            })
            .collect();
        stats.start_maps += maps.len();
        // Solvent test positions, drawn once per start node and reused for
        // every price system built from time t.
        let mut zetas: HashMap<NodeId, Vec<Vec<Rat>>> = HashMap::new();
        for &id in &start_nodes {
            let gens = inst.lambda_generators(id);
            let sample = (0..cfg.easy_zetas).map(|_| primitive_integer(&inst.random_combination(&gens))).collect();
            zetas.insert(id, sample);
        }
        let mut kept = false;
        for p in &measures {
            for y in &maps {
                let req = ExtensionRequest {
                    t,
                    measure: p.clone(),
                    y: y.clone(),
                };
                let ps = match inst.builder.build(&req) {
                    Ok(ps) => ps,
                    Err(e) => {
                        failures.push(format!("t={t}: {e}"));
                        continue;
                    }
                };
                stats.built += 1;
                let issues = verify_pce(market, &ps, &req);
                if issues.is_empty() {
                    stats.verified += 1;
                } else {
                    unverified.push(format!("t={t}: {}", issues.join("; ")));
                }
                if !kept {
                    report.price_systems.push(PriceSystemDoc::new(market, &req, &ps));
                    kept = true;
                }
                // Easy direction at every supported start node.
                for &id in &start_nodes {
                    if ps.z_at(id).is_none() {
                        continue;
                    }
                    for zeta in &zetas[&id] {
                        stats.easy_direction += 1;
                        match easy_direction_check(market, &ps, id, zeta) {
                            Ok(true) => {}
                            Ok(false) => easy_failures.push(format!("{} at {}", crate::rational::show(zeta), market.label(id))),
                            Err(e) => easy_failures.push(e.to_string()),
                        }
                    }
                }
            }
        }
    }

    checks.record("every probe extends", failures.is_empty(), failures.join("; "));
    checks.record("every price system verifies", unverified.is_empty(), unverified.join("; "));
    checks.record("easy direction identity", easy_failures.is_empty(), easy_failures.join("; "));
    checks.record(
        "at least one price system embedded",
        !report.price_systems.is_empty(),
        String::new(),
    );

    let violations = strategy_search(inst, cfg.strategy_trials, &mut stats);
    checks.record("strategy search finds no arbitrage", violations.is_empty(), violations.join("; "));
    report.probes = stats;
}

/// Random admissible strategies started at random nodes against random
/// initial positions; a hit would contradict no-arbitrage.
fn strategy_search(inst: &mut Instance, trials: usize, stats: &mut ProbeStats) -> Vec<String> {
    let market = inst.market;
    let tree = market.tree();
    let starts: Vec<NodeId> = tree.non_terminal().into_iter().filter(|&id| !market.is_polar(id)).collect();
    let d = market.assets();
    let mut hits = Vec::new();
    for _ in 0..trials {
        let node = starts[inst.rng.random_range(0..starts.len())];
        let mut strategy = Strategy::zero(market);
        for leaf in tree.leaves_below(node) {
            let mut cur = leaf;
            while cur != node {
                if strategy.increments[cur.0].iter().all(Zero::is_zero) && inst.rng.random_bool(0.5) {
                    let gens = market.solvency(cur).generators().expect("solvency cones carry generators").to_vec();
                    strategy.increments[cur.0] = inst.random_combination(&gens).iter().map(|v| -v).collect();
                }
                cur = tree.parent(cur).expect("leaf lies below node");
            }
        }
        let zeta: Vec<Rat> = (0..d).map(|_| int(inst.rng.random_range(-3..=3))).collect();
        stats.strategy_trials += 1;
        match verify_global_certificate(market, &zeta, &strategy, node) {
            Ok(false) => {}
            Ok(true) => hits.push(format!("zeta {} at {}", crate::rational::show(&zeta), market.label(node))),
            Err(e) => hits.push(e.to_string()),
        }
    }
    hits
}

fn fails_branch(inst: &mut Instance, failing: &[ArbitrageCertificate], report: &mut InstanceReport, checks: &mut Checks) {
    let market = inst.market;
    for cert in failing {
        let label = market.label(cert.node);
        let verified = cert.verify(market);
        checks.record(&format!("certificate at {label} verifies"), verified.is_ok(), err_text(&verified));

        let strategy = arbitrage_to_global(market, cert);
        let global = strategy
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|s| verify_global_certificate(market, &cert.zeta, s, cert.node).map_err(|e| e.to_string()));
        checks.record(
            &format!("global strategy at {label} verifies"),
            global == Ok(true),
            global.err().unwrap_or_default(),
        );

        let mut doc = CertificateDoc::new(market, cert, strategy.as_ref().ok());
        match find_witness(inst, cert) {
            Ok(w) => {
                checks.record(&format!("non-extendable start price at {label}"), true, String::new());
                doc.witness = Some(w);
            }
            Err(e) => checks.record(&format!("non-extendable start price at {label}"), false, e),
        }
        report.certificates.push(doc);
    }
}

fn err_text<T, E: std::fmt::Display>(r: &Result<T, E>) -> String {
    r.as_ref().err().map(|e| e.to_string()).unwrap_or_default()
}

/// `y = (1 - delta) r + delta y0` with `delta` halved from 1/2 until `y`
/// leaves the set of extendable start prices; then a full build from `y` must
/// be blocked.
fn find_witness(inst: &mut Instance, cert: &ArbitrageCertificate) -> Result<WitnessDoc, String> {
    let market = inst.market;
    let node = cert.node;
    let y0 = inst.interior_point(node);
    let p = market.uniform_mixture(node).ok_or("node has no kernels")?;
    let r = &cert.separating_ray;
    let mut delta = Rat::new(1.into(), 2.into());
    for _ in 0..MAX_HALVINGS {
        let y = add(&scale(r, &(Rat::one() - &delta)), &scale(&y0, &delta));
        if theta_membership(market, node, &p, &y).map_err(|e| e.to_string())? {
            delta /= int(2);
            continue;
        }
        if !market.dual(node).interior_margin(&y).map_err(|e| e.to_string())?.is_positive() {
            return Err(format!("candidate {} is not interior", crate::rational::show(&y)));
        }
        let obstruction = match inst.builder.step(node, &y) {
            OneStep::Infeasible(ob) => ob.clone(),
            OneStep::Extended(_) => return Err("one-step split succeeded after membership failed".into()),
        };
        if !obstruction.verify(market, node, &y).map_err(|e| e.to_string())? {
            return Err("obstruction does not verify".into());
        }

        // The whole construction from this start must fail as well.
        let t = market.tree().time(node);
        let mut start = vec![None; market.tree().len()];
        for id in market.tree().nodes_at(t) {
            if !market.is_polar(id) {
                start[id.0] = Some(if id == node { y.clone() } else { inst.interior_point(id) });
            }
        }
        let req = ExtensionRequest {
            t,
            measure: market.uniform_measure(),
            y: start,
        };
        return match inst.builder.build(&req) {
            Err(PceError::NoExtension { .. }) => Ok(WitnessDoc {
                y: format_vec(&y),
                delta: format_rat(&delta),
                obstruction: obstruction_name(obstruction.kind).to_string(),
                obstruction_zeta: format_vec(&obstruction.zeta),
            }),
            Err(e) => Err(format!("build from the witness failed unexpectedly: {e}")),
            Ok(_) => Err("build from the witness succeeded".into()),
        };
    }
    Err(format!("no witness after {MAX_HALVINGS} halvings"))
}

/// Re-checks a report from its embedded documents: certificates, global
/// strategies, witnesses and price systems. Returns one line per problem.
pub fn verify_report(report: &ExperimentReport) -> Vec<String> {
    let mut problems = Vec::new();
    for r in &report.instances {
        let name = &r.name;
        let market = match r.instance.to_market() {
            Ok(m) => m,
            Err(e) => {
                if r.verdict != "invalid" {
                    problems.push(format!("{name}: instance does not parse: {e}"));
                }
                continue;
            }
        };
        match r.verdict.as_str() {
            "holds" => {
                if r.price_systems.is_empty() {
                    problems.push(format!("{name}: no price system embedded"));
                }
                for ps_doc in &r.price_systems {
                    match ps_doc.to_parts(&market) {
                        Ok((req, ps)) => {
                            if let Err(e) = req.validate(&market) {
                                problems.push(format!("{name}: embedded request invalid: {e}"));
                            }
                            for issue in verify_pce(&market, &ps, &req) {
                                problems.push(format!("{name}: {issue}"));
                            }
                        }
                        Err(e) => problems.push(format!("{name}: {e}")),
                    }
                }
            }
            "fails" => {
                if r.certificates.is_empty() {
                    problems.push(format!("{name}: no certificate embedded"));
                }
                for c in &r.certificates {
                    if let Err(e) = verify_certificate_doc(&market, c) {
                        problems.push(format!("{name}: certificate at {}: {e}", c.node));
                    }
                }
                let listed: Vec<&String> = r.certificates.iter().map(|c| &c.node).collect();
                if listed != r.failing_nodes.iter().collect::<Vec<_>>() {
                    problems.push(format!("{name}: failing nodes differ from certificate nodes"));
                }
            }
            "invalid" => {}
            other => problems.push(format!("{name}: unknown verdict {other:?}")),
        }
    }
    let s = &report.summary;
    let count = |v: &str| report.instances.iter().filter(|r| r.verdict == v).count();
    if s.instances != report.instances.len()
        || s.holds != count("holds")
        || s.fails != count("fails")
        || s.invalid != count("invalid")
        || s.counterexamples != report.instances.iter().filter(|r| r.counterexample).count()
    {
        problems.push("summary does not match the instance entries".into());
    }
    problems
}

fn verify_certificate_doc(market: &Market, c: &CertificateDoc) -> Result<(), String> {
    let cert = c.certificate(market).map_err(|e| e.to_string())?;
    cert.verify(market).map_err(|e| e.to_string())?;
    let strategy = c.strategy(market).map_err(|e| e.to_string())?;
    if !verify_global_certificate(market, &cert.zeta, &strategy, cert.node).map_err(|e| e.to_string())? {
        return Err("global strategy does not verify".into());
    }
    let w = c.witness.as_ref().ok_or("no witness")?;
    let y = parse_vec(&w.y).map_err(|e| e.to_string())?;
    if !market.dual(cert.node).interior_margin(&y).map_err(|e| e.to_string())?.is_positive() {
        return Err("witness is not interior".into());
    }
    let kind = obstruction_kind(&w.obstruction).ok_or("unknown obstruction kind")?;
    let zeta = parse_vec(&w.obstruction_zeta).map_err(|e| e.to_string())?;
    if is_zero_vec(&zeta) {
        return Err("obstruction is zero".into());
    }
    let ob = crate::cps::Obstruction { kind, zeta };
    if !ob.verify(market, cert.node, &y).map_err(|e| e.to_string())? {
        return Err("obstruction does not verify".into());
    }
    if !y.iter().all(|v| !v.is_negative()) {
        return Err("witness has a negative coordinate".into());
    }
    Ok(())
}
