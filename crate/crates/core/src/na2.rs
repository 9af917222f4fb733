//! No-arbitrage of the second kind, node by node and over the whole tree.
//!
//! At a node the condition says: every position that is solvent at all
//! reachable children is already solvent at the node, i.e. the support cone
//! `Lambda` is contained in `K`. The primary test is dual: each extreme ray of
//! `K*` at the node must be a conic combination of the children's dual rays.
//! When a ray `r` is not, a separating position `zeta` with `<g, zeta> >= 0`
//! for every child dual ray `g` and `<r, zeta> < 0` is an arbitrage.

use rayon::prelude::*;
use thiserror::Error;

use num_traits::{Signed, Zero};

use crate::cone::{conic_combination, ConeError};
use crate::lp::{lp_solve, Direction, LinearProgram, LpOutcome, Sense, VarBound};
use crate::rational::{add, dot, neg, primitive_integer, show, zeros, Rat};
use crate::tree::{Market, NodeId, TreeError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Na2Error {
    #[error("node {0} is terminal")]
    Terminal(String),
    #[error("verdict irrelevant: node {0} is polar")]
    Polar(String),
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("strategy is not admissible at node {node}: -xi = {} is not solvent", show(.position))]
    Inadmissible { node: String, position: Vec<Rat> },
    #[error("strategy has {got} entries, the tree has {expected} nodes")]
    StrategyShape { expected: usize, got: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// A position `zeta` at a node that is solvent at every reachable child but
/// not at the node, with a dual ray witnessing the latter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbitrageCertificate {
    pub time: usize,
    pub node: NodeId,
    pub zeta: Vec<Rat>,
    /// Extreme ray `r` of `K*` at the node with `<r, zeta> < 0`.
    pub separating_ray: Vec<Rat>,
}

impl ArbitrageCertificate {
    /// Independent check by substitution plus a generator-membership LP.
    pub fn verify(&self, market: &Market) -> Result<(), Na2Error> {
        let tree = market.tree();
        let bad = |msg: String| Err(Na2Error::InvalidCertificate(msg));
        if self.node.0 >= tree.len() {
            return bad(format!("node {} does not exist", self.node));
        }
        let label = market.label(self.node);
        if tree.is_terminal(self.node) {
            return bad(format!("node {label} is terminal"));
        }
        if tree.time(self.node) != self.time {
            return bad(format!("node {label} is not at time {}", self.time));
        }
        if market.is_polar(self.node) {
            return bad(format!("node {label} is polar"));
        }
        let d = market.assets();
        if self.zeta.len() != d || self.separating_ray.len() != d {
            return bad("vector length differs from the asset count".into());
        }
        let lambda = market.support_cone(self.node)?;
        if !lambda.contains_via_normals(&self.zeta)? {
            return bad(format!("zeta {} is not solvent at every reachable child", show(&self.zeta)));
        }
        let r = &self.separating_ray;
        if r.iter().all(Zero::is_zero) || !market.dual(self.node).contains_via_normals(r)? {
            return bad(format!("{} is not a nonzero dual vector at {label}", show(r)));
        }
        if !dot(r, &self.zeta).is_negative() {
            return bad(format!("<r, zeta> = {} is not negative", dot(r, &self.zeta)));
        }
        if market.solvency(self.node).contains_via_generators(&self.zeta)? {
            return bad(format!("zeta is solvent at {label}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Na2Verdict {
    Holds,
    Fails(ArbitrageCertificate),
}

impl Na2Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Na2Verdict::Holds)
    }
}

/// Local verdict at a non-terminal, non-polar node.
pub fn na2_local(market: &Market, node: NodeId) -> Result<Na2Verdict, Na2Error> {
    check_node(market, node)?;
    let successor_rays = market.successor_dual_rays(node)?;
    let children = market.reachable_children(node)?;
    // Rays are tested from the lexicographically largest down.
    for r in market.cones(node).dual_rays().iter().rev() {
        // Cheap sufficient test first: the ray lies in one child's dual cone.
        let in_one_child = children
            .iter()
            .any(|&c| market.dual(c).contains_via_normals(r).unwrap_or(false));
        if in_one_child || conic_combination(&successor_rays, r).is_some() {
            continue;
        }
        let zeta = separate(&successor_rays, r);
        return Ok(Na2Verdict::Fails(ArbitrageCertificate {
            time: market.tree().time(node),
            node,
            zeta,
            separating_ray: r.clone(),
        }));
    }
    Ok(Na2Verdict::Holds)
}

/// Primal cross-check: `Lambda` in V-representation by double description,
/// then every generator tested against the node's normals.
pub fn na2_local_primal(market: &Market, node: NodeId) -> Result<bool, Na2Error> {
    check_node(market, node)?;
    let lambda = market.support_cone(node)?;
    let gens = lambda.extreme_rays()?;
    let k = market.solvency(node);
    for g in &gens {
        if !k.contains_via_normals(g)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_node(market: &Market, node: NodeId) -> Result<(), Na2Error> {
    if market.tree().is_terminal(node) {
        return Err(Na2Error::Terminal(market.label(node)));
    }
    if market.is_polar(node) {
        return Err(Na2Error::Polar(market.label(node)));
    }
    Ok(())
}

/// `min sum_g <g, zeta>` subject to `<g, zeta> >= 0` and `<r, zeta> = -1`,
/// returned as a primitive integer vector.
fn separate(successor_rays: &[Vec<Rat>], r: &[Rat]) -> Vec<Rat> {
    let d = r.len();
    let objective = successor_rays.iter().fold(zeros(d), |acc, g| add(&acc, g));
    let mut lp = LinearProgram::new(Direction::Minimize, objective);
    for i in 0..d {
        lp.set_bound(i, VarBound::Free);
    }
    for g in successor_rays {
        lp.add(g.clone(), Sense::Ge, Rat::zero());
    }
    lp.add(r.to_vec(), Sense::Eq, -num_traits::one::<Rat>());
    match lp_solve(&lp).expect("separation program is well formed") {
        LpOutcome::Optimal { point, .. } => primitive_integer(&point),
        other => unreachable!("a dual ray outside the successor cone is always separable: {other:?}"),
    }
}

/// Whole-tree verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalVerdict {
    pub holds: bool,
    /// Certificates at every non-polar failing node, in node order.
    pub failing: Vec<ArbitrageCertificate>,
}

/// Holds iff the local condition holds at every non-polar non-terminal node.
pub fn na2_global(market: &Market) -> GlobalVerdict {
    let nodes: Vec<NodeId> = market
        .tree()
        .non_terminal()
        .into_iter()
        .filter(|&id| !market.is_polar(id))
        .collect();
    let failing: Vec<ArbitrageCertificate> = nodes
        .par_iter()
        .map(|&id| na2_local(market, id).expect("node is non-terminal and non-polar"))
        .filter_map(|v| match v {
            Na2Verdict::Fails(c) => Some(c),
            Na2Verdict::Holds => None,
        })
        .collect();
    GlobalVerdict {
        holds: failing.is_empty(),
        failing,
    }
}

/// Adapted increments: `xi[node]` is acquired at that node, and `-xi` must be solvent there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub increments: Vec<Vec<Rat>>,
}

impl Strategy {
    pub fn zero(market: &Market) -> Self {
        Self {
            increments: vec![zeros(market.assets()); market.tree().len()],
        }
    }

    pub fn at(&self, id: NodeId) -> &[Rat] {
        &self.increments[id.0]
    }

    /// Checks `-xi in K` at every node.
    pub fn check_admissible(&self, market: &Market) -> Result<(), Na2Error> {
        if self.increments.len() != market.tree().len() {
            return Err(Na2Error::StrategyShape {
                expected: market.tree().len(),
                got: self.increments.len(),
            });
        }
        for id in market.tree().ids() {
            let position = neg(&self.increments[id.0]);
            if !market.solvency(id).contains_via_normals(&position)? {
                return Err(Na2Error::Inadmissible {
                    node: market.label(id),
                    position,
                });
            }
        }
        Ok(())
    }
}

/// Global strategy from a local certificate: `xi = -zeta` at every reachable
/// child of the certificate's node, zero elsewhere.
pub fn arbitrage_to_global(market: &Market, cert: &ArbitrageCertificate) -> Result<Strategy, Na2Error> {
    cert.verify(market)?;
    let mut strategy = Strategy::zero(market);
    let minus = neg(&cert.zeta);
    for child in market.reachable_children(cert.node)? {
        strategy.increments[child.0] = minus.clone();
    }
    Ok(strategy)
}

/// True iff `zeta + sum of xi after the node` is solvent at every non-polar
/// leaf below `node` while `zeta` is not solvent at `node`: the global form of
/// the no-arbitrage implication is violated.
pub fn verify_global_certificate(
    market: &Market,
    zeta: &[Rat],
    strategy: &Strategy,
    node: NodeId,
) -> Result<bool, Na2Error> {
    strategy.check_admissible(market)?;
    let tree = market.tree();
    if zeta.len() != market.assets() {
        return Err(ConeError::DimensionMismatch {
            expected: market.assets(),
            got: zeta.len(),
        }
        .into());
    }
    for leaf in tree.leaves_below(node) {
        if market.is_polar(leaf) {
            continue;
        }
        let mut total = zeta.to_vec();
        let mut cur = leaf;
        while cur != node {
            total = add(&total, strategy.at(cur));
            cur = tree.parent(cur).expect("leaf lies below node");
        }
        if !market.solvency(leaf).contains_via_normals(&total)? {
            return Ok(false);
        }
    }
    Ok(!market.solvency(node).contains_via_normals(zeta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::BidAskMatrix;
    use crate::rational::{int, rat};
    use crate::tree::{EventTree, ModelFamily};

    /// Root with rate `root`, two children with the given rates, uniform kernel.
    fn one_period(root: i64, children: [i64; 2], kernels: &[Vec<Rat>]) -> Market {
        let tree = EventTree::uniform(1, 2).unwrap();
        let bidask = std::iter::once(root)
            .chain(children)
            .map(|r| BidAskMatrix::uniform(2, int(r)).unwrap())
            .collect();
        let models = ModelFamily::homogeneous(&tree, kernels);
        Market::new(tree, bidask, models).unwrap()
    }

    fn uniform_kernel() -> Vec<Vec<Rat>> {
        vec![vec![rat(1, 2), rat(1, 2)]]
    }

    #[test]
    fn drop_from_eight_to_two_fails() {
        let m = one_period(8, [2, 2], &uniform_kernel());
        match na2_local(&m, NodeId(0)).unwrap() {
            Na2Verdict::Fails(cert) => {
                assert_eq!(cert.zeta, vec![int(2), int(-1)]);
                assert_eq!(cert.separating_ray, vec![int(1), int(8)]);
                assert_eq!(dot(&cert.separating_ray, &cert.zeta), int(-6));
                cert.verify(&m).unwrap();
            }
            Na2Verdict::Holds => panic!("expected failure"),
        }
        assert!(!na2_local_primal(&m, NodeId(0)).unwrap());
    }

    #[test]
    fn rising_costs_hold() {
        let m = one_period(2, [2, 8], &uniform_kernel());
        assert!(na2_local(&m, NodeId(0)).unwrap().holds());
        assert!(na2_local_primal(&m, NodeId(0)).unwrap());
        let m = one_period(2, [2, 2], &uniform_kernel());
        assert!(na2_local(&m, NodeId(0)).unwrap().holds());
    }

    #[test]
    fn unreachable_child_is_ignored() {
        // Only the rate-2 child is reachable; the rate-8 root still fails.
        let m = one_period(8, [2, 16], &[vec![int(1), int(0)]]);
        assert!(!na2_local(&m, NodeId(0)).unwrap().holds());
        // Only the rate-16 child is reachable: holds.
        let m = one_period(8, [2, 16], &[vec![int(0), int(1)]]);
        assert!(na2_local(&m, NodeId(0)).unwrap().holds());
        assert!(matches!(na2_local(&m, NodeId(1)), Err(Na2Error::Terminal(_))));
    }

    #[test]
    fn polar_nodes_are_rejected_and_exempt() {
        let tree = EventTree::uniform(2, 2).unwrap();
        let mut rates = vec![2; tree.len()];
        // Node /1 is polar; give it a drop to its children.
        let polar = tree.find(&[1]).unwrap();
        rates[polar.0] = 8;
        let bidask = rates.iter().map(|&r| BidAskMatrix::uniform(2, int(r)).unwrap()).collect();
        let models = ModelFamily::homogeneous(&tree, &[vec![int(1), int(0)]]);
        let m = Market::new(tree, bidask, models).unwrap();
        assert!(matches!(na2_local(&m, polar), Err(Na2Error::Polar(_))));
        // The root sees only /0 (rate 2): fine. /0 sees rate 2 children: fine.
        assert!(na2_global(&m).holds);
    }

    #[test]
    fn global_failure_at_an_inner_node() {
        let tree = EventTree::uniform(2, 2).unwrap();
        let mut rates = vec![2; tree.len()];
        let inner = tree.find(&[0]).unwrap();
        rates[0] = 8;
        rates[inner.0] = 8;
        let bidask = rates.iter().map(|&r| BidAskMatrix::uniform(2, int(r)).unwrap()).collect();
        let models = ModelFamily::homogeneous(&tree, &uniform_kernel());
        let m = Market::new(tree, bidask, models).unwrap();
        let v = na2_global(&m);
        assert!(!v.holds);
        assert_eq!(v.failing.len(), 1);
        assert_eq!(v.failing[0].node, inner);
    }

    #[test]
    fn certificate_to_global_strategy() {
        let m = one_period(8, [2, 2], &uniform_kernel());
        let Na2Verdict::Fails(cert) = na2_local(&m, NodeId(0)).unwrap() else {
            panic!("expected failure")
        };
        let xi = arbitrage_to_global(&m, &cert).unwrap();
        assert_eq!(xi.at(NodeId(1)), &[int(-2), int(1)]);
        assert_eq!(xi.at(NodeId(2)), &[int(-2), int(1)]);
        assert!(xi.at(NodeId(0)).iter().all(Zero::is_zero));
        assert!(verify_global_certificate(&m, &cert.zeta, &xi, NodeId(0)).unwrap());
    }

    #[test]
    fn zero_strategy_is_not_a_certificate() {
        let m = one_period(2, [2, 2], &uniform_kernel());
        let zero = Strategy::zero(&m);
        assert!(!verify_global_certificate(&m, &[int(1), int(1)], &zero, NodeId(0)).unwrap());
        assert!(!verify_global_certificate(&m, &[int(2), int(-1)], &zero, NodeId(0)).unwrap());
    }

    #[test]
    fn inadmissible_strategy_is_an_error() {
        let m = one_period(2, [2, 2], &uniform_kernel());
        let mut xi = Strategy::zero(&m);
        xi.increments[1] = vec![int(1), int(0)];
        assert!(matches!(
            verify_global_certificate(&m, &[int(1), int(1)], &xi, NodeId(0)),
            Err(Na2Error::Inadmissible { .. })
        ));
    }

    #[test]
    fn tampered_certificates_fail_verification() {
        let m = one_period(8, [2, 2], &uniform_kernel());
        let Na2Verdict::Fails(cert) = na2_local(&m, NodeId(0)).unwrap() else {
            panic!("expected failure")
        };
        let mut c = cert.clone();
        c.zeta = vec![int(3), int(-2)];
        assert!(c.verify(&m).is_err());
        let mut c = cert.clone();
        c.separating_ray = vec![int(1), int(1)];
        assert!(c.verify(&m).is_err());
        let mut c = cert;
        c.time = 1;
        assert!(c.verify(&m).is_err());
    }
}
