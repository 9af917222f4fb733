//! Command-line surface. Exit codes: 0 success, 1 usage or I/O error,
//! 2 invalid input (or a request that cannot be extended), 3 counterexample.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cps::{build_pce, verify_pce, ExtensionRequest, PceError};
use crate::na2::{arbitrage_to_global, na2_global};
use crate::rational::{parse_rat, show};
use crate::tree::Market;

use super::doc::{
    obstruction_name, read_json, to_json, write_json, CertificateDoc, DocError, ExperimentReport, InstanceDocument, MeasureDoc,
    Metadata, PriceSystemDoc, StartDoc,
};
use super::equiv::{run_equivalence, verify_report, EquivConfig};
use super::gen::{batch_seed, generate, GeneratorConfig, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_COUNTEREXAMPLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cpslab", version, about = "Exact no-arbitrage checks and consistent price systems on event trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an instance file for structural and economic consistency.
    Validate {
        file: PathBuf,
        /// Declared round-trip bound c; overrides the one in the file.
        #[arg(long)]
        bound: Option<String>,
    },
    /// Decide no-arbitrage at every node and print certificates.
    Na2 {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Build a consistent price system from time t.
    Pce(PceArgs),
    /// Generate instances.
    Gen(GenArgs),
    /// Run the equivalence experiment over instance files.
    Equiv(EquivArgs),
    /// Summarize and re-verify a report.
    Report { file: PathBuf },
}

#[derive(Debug, Args)]
struct PceArgs {
    file: PathBuf,
    #[arg(long)]
    time: usize,
    /// `uniform` or a measure file.
    #[arg(long, default_value = "uniform")]
    measure: String,
    /// Start prices file; defaults to a margin-maximizing interior point per node.
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Children per node, `lo..hi` or a single number.
    #[arg(long, default_value = "1..3", value_parser = parse_range)]
    branching: (usize, usize),
    /// Extreme kernels per node, `lo..hi` or a single number.
    #[arg(long, default_value = "1..3", value_parser = parse_range)]
    kernels: (usize, usize),
    /// Proportional costs in percent, `lo..hi`.
    #[arg(long, default_value = "1..50", value_parser = parse_range)]
    costs: (usize, usize),
    /// Write this many instances into the directory given by `-o`.
    #[arg(long)]
    count: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EquivArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, default_value_t = 20)]
    probes: usize,
    #[arg(long, default_value_t = 5)]
    y_probes: usize,
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: super::gen::GenError| e.to_string())
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}"));
    match s.split_once("..") {
        Some((a, b)) => Ok((parse(a)?, parse(b.trim_start_matches('='))?)),
        None => {
            let v = parse(s)?;
            Ok((v, v))
        }
    }
}

enum Failure {
    Usage(String),
    Invalid(String),
}

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        match e {
            DocError::Io { .. } => Failure::Usage(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Validate { file, bound } => validate(&file, bound.as_deref()),
        Command::Na2 { file, json } => na2(&file, json),
        Command::Pce(args) => pce(&args),
        Command::Gen(args) => gen(&args),
        Command::Equiv(args) => equiv(&args),
        Command::Report { file } => report(&file),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("invalid: {msg}");
            EXIT_INVALID
        }
    }
}

fn load(file: &Path) -> Result<(InstanceDocument, Market), Failure> {
    let doc: InstanceDocument = read_json(file)?;
    let market = doc.to_market()?;
    Ok((doc, market))
}

fn load_valid(file: &Path) -> Result<Market, Failure> {
    let (doc, market) = load(file)?;
    let report = market.validate(doc.declared_bound()?.as_ref());
    if let Some(v) = report.violations.first() {
        return Err(Failure::Invalid(v.message.clone()));
    }
    Ok(market)
}

fn validate(file: &Path, bound: Option<&str>) -> Result<i32, Failure> {
    let (doc, market) = load(file)?;
    let declared = match bound {
        Some(b) => Some(parse_rat(b).map_err(|e| Failure::Usage(e.to_string()))?),
        None => doc.declared_bound()?,
    };
    let report = market.validate(declared.as_ref());
    for w in &report.warnings {
        println!("warning: {}", w.message);
    }
    for v in &report.violations {
        println!("violation: {}", v.message);
    }
    if report.is_valid() {
        println!(
            "valid: {} assets, horizon {}, {} nodes",
            market.assets(),
            market.tree().horizon(),
            market.tree().len()
        );
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_INVALID)
    }
}

fn na2(file: &Path, json: bool) -> Result<i32, Failure> {
    let market = load_valid(file)?;
    let verdict = na2_global(&market);
    if json {
        let docs: Vec<CertificateDoc> = verdict
            .failing
            .iter()
            .map(|c| CertificateDoc::new(&market, c, arbitrage_to_global(&market, c).ok().as_ref()))
            .collect();
        print!("{}", to_json(&docs));
        return Ok(EXIT_OK);
    }
    if verdict.holds {
        println!("holds");
    } else {
        println!("fails at {} node(s)", verdict.failing.len());
        for c in &verdict.failing {
            println!(
                "  {} (t={}): zeta = {}, separating dual ray = {}",
                market.label(c.node),
                c.time,
                show(&c.zeta),
                show(&c.separating_ray)
            );
        }
    }
    Ok(EXIT_OK)
}

fn pce(args: &PceArgs) -> Result<i32, Failure> {
    let market = load_valid(&args.file)?;
    let measure = if args.measure == "uniform" {
        market.uniform_measure()
    } else {
        read_json::<MeasureDoc>(Path::new(&args.measure))?.to_measure(&market)?
    };
    let tree = market.tree();
    if args.time >= tree.horizon() {
        return Err(Failure::Usage(format!("--time must be below the horizon {}", tree.horizon())));
    }
    let y = match &args.y {
        Some(path) => read_json::<StartDoc>(path)?.to_values(&market)?,
        None => {
            let mut y = vec![None; tree.len()];
            for id in tree.nodes_at(args.time) {
                if !market.is_polar(id) {
                    let point = market
                        .dual(id)
                        .pick_interior_point()
                        .map_err(|e| Failure::Invalid(format!("node {}: {e}", market.label(id))))?;
                    y[id.0] = Some(point);
                }
            }
            y
        }
    };
    let req = ExtensionRequest {
        t: args.time,
        measure,
        y,
    };
    match build_pce(&market, &req) {
        Ok(ps) => {
            let issues = verify_pce(&market, &ps, &req);
            if !issues.is_empty() {
                for i in &issues {
                    eprintln!("verification: {i}");
                }
                return Ok(EXIT_COUNTEREXAMPLE);
            }
            let doc = PriceSystemDoc::new(&market, &req, &ps);
            match &args.output {
                Some(path) => write_json(path, &doc)?,
                None => print!("{}", to_json(&doc)),
            }
            Ok(EXIT_OK)
        }
        Err(PceError::NoExtension { node, obstruction }) => {
            println!(
                "no extension at {node}: {} obstruction zeta = {}",
                obstruction_name(obstruction.kind),
                show(&obstruction.zeta)
            );
            Ok(EXIT_INVALID)
        }
        Err(e) => Err(Failure::Invalid(e.to_string())),
    }
}

fn gen(args: &GenArgs) -> Result<i32, Failure> {
    let to_u32 = |v: usize| u32::try_from(v).map_err(|_| Failure::Usage("cost percent out of range".into()));
    let base = GeneratorConfig {
        mode: args.mode,
        d: args.d,
        depth: args.depth,
        branching: args.branching,
        kernels: args.kernels,
        cost_percent: (to_u32(args.costs.0)?, to_u32(args.costs.1)?),
        seed: args.seed,
    };
    let write_one = |cfg: GeneratorConfig, path: &Path| -> Result<(), Failure> {
        let market = generate(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
        let doc = InstanceDocument::from_market(&market, Some(Metadata { generator: cfg }));
        write_json(path, &doc)?;
        Ok(())
    };
    match args.count {
        None => {
            write_one(base, &args.output)?;
            println!("wrote {}", args.output.display());
        }
        Some(n) => {
            std::fs::create_dir_all(&args.output).map_err(|e| Failure::Usage(e.to_string()))?;
            for i in 0..n {
                let cfg = GeneratorConfig {
                    seed: batch_seed(args.seed, i as u64),
                    ..base.clone()
                };
                write_one(cfg, &args.output.join(format!("instance-{i:04}.json")))?;
            }
            println!("wrote {n} instances to {}", args.output.display());
        }
    }
    Ok(EXIT_OK)
}

fn equiv(args: &EquivArgs) -> Result<i32, Failure> {
    let mut instances = Vec::with_capacity(args.files.len());
    for f in &args.files {
        instances.push((f.display().to_string(), read_json::<InstanceDocument>(f)?));
    }
    let cfg = EquivConfig {
        probes: args.probes,
        y_probes: args.y_probes,
        exhaustive: args.exhaustive,
        seed: args.seed,
        ..EquivConfig::default()
    };
    let report = run_equivalence(&instances, &cfg, args.workers);
    write_json(&args.output, &report)?;
    print_summary(&report);
    Ok(exit_for(&report))
}

fn exit_for(report: &ExperimentReport) -> i32 {
    if report.summary.counterexamples > 0 {
        EXIT_COUNTEREXAMPLE
    } else if report.summary.invalid > 0 {
        EXIT_INVALID
    } else {
        EXIT_OK
    }
}

fn print_summary(report: &ExperimentReport) {
    let s = &report.summary;
    println!(
        "{} instances: {} holds, {} fails, {} invalid, {} counterexamples",
        s.instances, s.holds, s.fails, s.invalid, s.counterexamples
    );
}

fn report(file: &Path) -> Result<i32, Failure> {
    let report: ExperimentReport = read_json(file)?;
    for r in &report.instances {
        let mark = if r.counterexample { "COUNTEREXAMPLE" } else { "ok" };
        let detail = match r.verdict.as_str() {
            "holds" => format!(
                "{} price systems built, {} verified, {} easy-direction checks",
                r.probes.built, r.probes.verified, r.probes.easy_direction
            ),
            "fails" => format!("failing at {}", r.failing_nodes.join(", ")),
            _ => r.checks.iter().filter(|c| !c.passed).map(|c| c.detail.clone()).collect::<Vec<_>>().join("; "),
        };
        println!("{:<40} {:<8} {:<14} {}", r.name, r.verdict, mark, detail);
        for c in r.checks.iter().filter(|c| !c.passed) {
            println!("    failed check: {} {}", c.name, c.detail);
        }
    }
    print_summary(&report);
    let total_ms: u64 = report.instances.iter().map(|r| r.elapsed_us).sum::<u64>() / 1000;
    println!("total instance time {total_ms} ms");
    let problems = verify_report(&report);
    if problems.is_empty() {
        println!("embedded certificates and price systems re-verify");
    } else {
        for p in &problems {
            println!("re-verification: {p}");
        }
        if report.summary.counterexamples == 0 {
            return Ok(EXIT_INVALID);
        }
    }
    Ok(exit_for(&report))
}
