//! Seeded instance generator.
//!
//! Bid-ask matrices come from a frictionless quote `S` and costs `lambda`:
//! `pi_ij = S_j (1 + lambda_ij) / S_i`, closed under indirect exchange so the
//! triangle inequality holds. Modes:
//!
//! * `monotone`: every child's matrix dominates its parent's entrywise, which
//!   shrinks the solvency cone along the tree and so keeps no-arbitrage.
//! * `planted-arbitrage`: a monotone instance in which one non-polar node has
//!   its rates multiplied by `kappa = 4, 8, 16, ...` until the node fails.
//! * `random`: quotes move freely between nodes.

use std::fmt;
use std::str::FromStr;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::BidAskMatrix;
use crate::na2::na2_local;
use crate::rational::{int, rat, Rat};
use crate::tree::{EventTree, Kernel, Market, ModelFamily, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Monotone,
    PlantedArbitrage,
    Random,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Monotone => "monotone",
            Mode::PlantedArbitrage => "planted-arbitrage",
            Mode::Random => "random",
        })
    }
}

impl FromStr for Mode {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, GenError> {
        match s {
            "monotone" => Ok(Mode::Monotone),
            "planted-arbitrage" | "planted" => Ok(Mode::PlantedArbitrage),
            "random" => Ok(Mode::Random),
            other => Err(GenError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("generator config: {0}")]
    Config(String),
    #[error("could not plant an arbitrage: every non-terminal node is polar or no scaling up to 2^{0} fails")]
    CannotPlant(u32),
}

/// Generator parameters. Ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub mode: Mode,
    pub d: usize,
    pub depth: usize,
    pub branching: (usize, usize),
    pub kernels: (usize, usize),
    /// Proportional costs in percent.
    pub cost_percent: (u32, u32),
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(mode: Mode, d: usize, depth: usize, seed: u64) -> Self {
        Self {
            mode,
            d,
            depth,
            branching: (1, 3),
            kernels: (1, 3),
            cost_percent: (1, 50),
            seed,
        }
    }

    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Config(m.to_string()));
        if self.d < 2 {
            return bad("at least two assets are needed");
        }
        if self.depth == 0 {
            return bad("depth must be at least 1");
        }
        if self.branching.0 == 0 || self.branching.0 > self.branching.1 {
            return bad("branching range must be nonempty and start at 1 or more");
        }
        if self.kernels.0 == 0 || self.kernels.0 > self.kernels.1 {
            return bad("kernel count range must be nonempty and start at 1 or more");
        }
        if self.cost_percent.0 == 0 || self.cost_percent.0 > self.cost_percent.1 {
            return bad("cost range must be nonempty with positive costs");
        }
        Ok(())
    }
}

/// Builds the market described by `cfg`. Identical configs give identical markets.
pub fn generate(cfg: &GeneratorConfig) -> Result<Market, GenError> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tree = random_tree(&mut rng, cfg.depth, cfg.branching);
    let kernels = tree
        .ids()
        .map(|id| {
            if tree.is_terminal(id) {
                Vec::new()
            } else {
                let n = rng.random_range(cfg.kernels.0..=cfg.kernels.1);
                (0..n)
                    .map(|_| random_kernel(&mut rng, tree.children(id).len()))
                    .collect()
            }
        })
        .collect();
    let models = ModelFamily::new(kernels);

    let d = cfg.d;
    let mut bidask: Vec<BidAskMatrix> = Vec::with_capacity(tree.len());
    let mut quotes: Vec<Vec<Rat>> = Vec::with_capacity(tree.len());
    for id in tree.ids() {
        let parent = tree.parent(id);
        let (quote, pi) = match (cfg.mode, parent) {
            (_, None) => {
                let quote = random_quote(&mut rng, d);
                let pi = quote_matrix(&mut rng, &quote, cfg.cost_percent);
                (quote, pi)
            }
            (Mode::Random, Some(p)) => {
                let quote: Vec<Rat> = quotes[p.0]
                    .iter()
                    .enumerate()
                    .map(|(i, s)| if i == 0 { s.clone() } else { s * move_factor(&mut rng) })
                    .collect();
                let pi = quote_matrix(&mut rng, &quote, cfg.cost_percent);
                (quote, pi)
            }
            (_, Some(p)) => {
                // Entrywise growth of the parent's rates.
                let parent_pi = &bidask[p.0];
                let entries = (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| {
                                if i == j {
                                    Rat::one()
                                } else {
                                    let grow = rat(100 + rng.random_range(0..=cfg.cost_percent.1) as i64, 100);
                                    parent_pi.rate(i, j) * grow
                                }
                            })
                            .collect()
                    })
                    .collect();
                (quotes[p.0].clone(), closure(entries))
            }
        };
        quotes.push(quote);
        bidask.push(pi);
    }

    let market = Market::new(tree, bidask, models).expect("generated shapes are consistent");
    match cfg.mode {
        Mode::PlantedArbitrage => plant(&mut rng, market),
        _ => Ok(market),
    }
}

fn random_tree(rng: &mut ChaCha8Rng, depth: usize, branching: (usize, usize)) -> EventTree {
    let mut counts = Vec::new();
    let mut level = 1usize;
    for _ in 0..depth {
        let mut next = 0;
        for _ in 0..level {
            let b = rng.random_range(branching.0..=branching.1);
            counts.push(b);
            next += b;
        }
        level = next;
    }
    counts.extend(std::iter::repeat_n(0, level));
    EventTree::from_child_counts(depth, &counts).expect("generated counts describe a tree")
}

/// Probability vector with small integer weights; some entries may be zero.
fn random_kernel(rng: &mut ChaCha8Rng, b: usize) -> Kernel {
    let mut weights: Vec<i64> = (0..b).map(|_| rng.random_range(0..=3)).collect();
    if weights.iter().all(|&w| w == 0) {
        let j = rng.random_range(0..b);
        weights[j] = 1;
    }
    let total: i64 = weights.iter().sum();
    weights.into_iter().map(|w| rat(w, total)).collect()
}

fn random_quote(rng: &mut ChaCha8Rng, d: usize) -> Vec<Rat> {
    (0..d)
        .map(|i| if i == 0 { Rat::one() } else { rat(rng.random_range(2..=8), 4) })
        .collect()
}

fn move_factor(rng: &mut ChaCha8Rng) -> Rat {
    const FACTORS: [(i64, i64); 5] = [(1, 2), (2, 3), (1, 1), (3, 2), (2, 1)];
    let (n, d) = FACTORS[rng.random_range(0..FACTORS.len())];
    rat(n, d)
}

fn quote_matrix(rng: &mut ChaCha8Rng, quote: &[Rat], cost_percent: (u32, u32)) -> BidAskMatrix {
    let d = quote.len();
    let entries = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if i == j {
                        Rat::one()
                    } else {
                        let lambda = rat(rng.random_range(cost_percent.0..=cost_percent.1) as i64, 100);
                        &quote[j] * (Rat::one() + lambda) / &quote[i]
                    }
                })
                .collect()
        })
        .collect();
    closure(entries)
}

/// Cheapest indirect rates (Floyd-Warshall on products).
fn closure(mut pi: Vec<Vec<Rat>>) -> BidAskMatrix {
    let d = pi.len();
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                let via = &pi[i][k] * &pi[k][j];
                if via < pi[i][j] {
                    pi[i][j] = via;
                }
            }
        }
    }
    BidAskMatrix::new(pi).expect("closure keeps a valid bid-ask matrix")
}

const MAX_DOUBLINGS: u32 = 40;

fn plant(rng: &mut ChaCha8Rng, market: Market) -> Result<Market, GenError> {
    let tree = market.tree().clone();
    let candidates: Vec<NodeId> = tree
        .non_terminal()
        .into_iter()
        .filter(|&id| !market.is_polar(id))
        .collect();
    if candidates.is_empty() {
        return Err(GenError::CannotPlant(0));
    }
    let node = candidates[rng.random_range(0..candidates.len())];
    let base = market.bidask(node).clone();
    let mut kappa = int(4);
    for _ in 0..MAX_DOUBLINGS {
        let d = base.dim();
        let entries = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { Rat::one() } else { base.rate(i, j) * &kappa })
                    .collect()
            })
            .collect();
        let mut bidask = market.bidask_process().to_vec();
        bidask[node.0] = BidAskMatrix::new(entries).expect("scaled rates stay valid");
        let planted = Market::new(tree.clone(), bidask, market.models().clone()).expect("same shapes");
        if !na2_local(&planted, node).expect("node is non-terminal and non-polar").holds() {
            return Ok(planted);
        }
        kappa *= int(2);
    }
    Err(GenError::CannotPlant(MAX_DOUBLINGS))
}

/// Stable per-instance seed for batch generation.
pub fn batch_seed(base: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index);
    rng.random()
}

/// Configs for a mixed batch: `d` cycles through 2..=4 and the depth through
/// 1..=3, and each (d, depth) block of nine cycles the mode through random,
/// monotone, random, planted-arbitrage. Seeds come from [`batch_seed`].
pub fn mixed_batch(count: u64, seed: u64) -> Vec<GeneratorConfig> {
    const MODES: [Mode; 4] = [Mode::Random, Mode::Monotone, Mode::Random, Mode::PlantedArbitrage];
    (0..count)
        .map(|i| {
            let d = 2 + (i % 3) as usize;
            let depth = 1 + ((i / 3) % 3) as usize;
            let mode = MODES[((i / 9) % 4) as usize];
            GeneratorConfig::new(mode, d, depth, batch_seed(seed, i))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::na2::na2_global;

    #[test]
    fn same_seed_same_market() {
        let cfg = GeneratorConfig::new(Mode::Random, 3, 2, 7);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.bidask_process(), b.bidask_process());
        assert_eq!(a.models(), b.models());
        assert_eq!(a.tree(), b.tree());
    }

    #[test]
    fn modes_keep_their_promises() {
        for seed in 0..10 {
            let m = generate(&GeneratorConfig::new(Mode::Monotone, 2, 2, seed)).unwrap();
            assert!(m.validate(None).is_valid());
            assert!(na2_global(&m).holds, "monotone seed {seed}");
            let m = generate(&GeneratorConfig::new(Mode::PlantedArbitrage, 2, 2, seed)).unwrap();
            assert!(m.validate(None).is_valid());
            assert!(!na2_global(&m).holds, "planted seed {seed}");
        }
    }

    #[test]
    fn generated_matrices_satisfy_the_triangle_inequality() {
        let m = generate(&GeneratorConfig::new(Mode::Random, 4, 2, 3)).unwrap();
        let report = m.validate(None);
        assert!(report.is_valid());
        assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    }

    #[test]
    fn bad_ranges_are_rejected() {
        let mut cfg = GeneratorConfig::new(Mode::Random, 2, 1, 0);
        cfg.branching = (3, 1);
        assert!(matches!(generate(&cfg), Err(GenError::Config(_))));
        cfg = GeneratorConfig::new(Mode::Random, 1, 1, 0);
        assert!(generate(&cfg).is_err());
    }
}
