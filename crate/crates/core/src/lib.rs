//! Exact no-arbitrage analysis for markets with proportional transaction costs
//! on finite event trees.
//!
//! The crate checks robust no-arbitrage of the second kind (a position that is
//! quasi-surely solvent tomorrow must be solvent today), extracts arbitrage
//! certificates when it fails, and constructs strictly consistent price
//! systems when it holds. All arithmetic is exact.
//!
//! Module map:
//!
//! * [`rational`], [`lp`]: exact rationals and a dense simplex with certificates.
//! * [`cone`]: solvency cones, dual cones, double description, interior points.
//! * [`tree`]: event trees, model families, polar nodes, support cones.
//! * [`na2`]: local and global no-arbitrage verdicts and certificates.
//! * [`cps`]: one-step extensions and consistent price systems.
//! * [`lab`]: instance generation, JSON documents, the equivalence harness, CLI.

pub mod cone;
pub mod cps;
pub mod lab;
mod linalg;
pub mod lp;
pub mod rational;
pub mod na2;
pub mod tree;

pub use cone::{BidAskMatrix, ConeError, PolyCone};
pub use lp::{lp_feasible, lp_solve, LinearProgram, LpOutcome};
pub use rational::Rat;
pub use tree::{EventTree, Market, ModelFamily, NodeId, TreeMeasure};
