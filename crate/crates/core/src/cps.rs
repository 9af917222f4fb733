//! Strictly consistent price systems.
//!
//! The one-step problem at a node: given `y` in the interior of `K*`, split it
//! as `y = sum_k w_k` with every `w_k` strictly inside the dual cone of
//! reachable child `k`. The split is found by maximizing a common margin
//! `eps` with `<n, w_k> >= eps` for every normal `n` of the child's dual cone.
//! A positive optimum gives the kernel `q_k = w_k^1 / y^1` and the values
//! `z_k = w_k / q_k`, so `sum_k q_k z_k = y` and the first coordinate stays
//! `y^1` along the tree. When the optimum is zero or the program is
//! infeasible, the dual solution is a position `zeta` solvent at every
//! reachable child with `<zeta, y> <= 0`.
//!
//! [`build_pce`] runs the one-step problem forward from a start time through
//! the whole tree; [`verify_pce`] checks the result item by item.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::cone::ConeError;
use crate::lp::{lp_solve, Direction, LinearProgram, LpOutcome, Sense};
use crate::rational::{add, dot, is_zero_vec, neg, scale, show, zeros, Rat};
use crate::tree::{Kernel, Market, NodeId, TreeError, TreeMeasure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PceError {
    #[error("start time {t} must be below the horizon {horizon}")]
    BadTime { t: usize, horizon: usize },
    #[error("node {0} is terminal")]
    Terminal(String),
    #[error("measure has no kernel at node {0}")]
    MissingKernel(String),
    #[error("kernel at node {0} is not in the model hull")]
    NotAModel(String),
    #[error("no start value given for node {0}")]
    MissingY(String),
    #[error("start value {} at node {node} is not strictly inside K* (margin {margin})", show(.y))]
    NotInterior { node: String, y: Vec<Rat>, margin: Rat },
    #[error("branch {branch} of node {node} is not reachable")]
    Unreachable { node: String, branch: usize },
    #[error("no strictly consistent extension at node {node}")]
    NoExtension { node: String, obstruction: Obstruction },
    #[error("zeta {} is not solvent at every supported child of node {node}", show(.zeta))]
    NotSolventAhead { node: String, zeta: Vec<Rat> },
    #[error("node {0} carries no price vector")]
    NoPrice(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// Start data for an extension: time `t`, a model `P` and a price vector `Y`
/// at each time-`t` node (`None` where not needed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionRequest {
    pub t: usize,
    pub measure: TreeMeasure,
    pub y: Vec<Option<Vec<Rat>>>,
}

impl ExtensionRequest {
    /// The same start vector at every non-polar time-`t` node.
    pub fn constant(market: &Market, t: usize, measure: TreeMeasure, y: Vec<Rat>) -> Self {
        let mut values = vec![None; market.tree().len()];
        for id in market.tree().nodes_at(t) {
            if !market.is_polar(id) {
                values[id.0] = Some(y.clone());
            }
        }
        Self { t, measure, y: values }
    }

    /// Checks the request against the market: `P` is a model selection on its
    /// support and every `Y` on that support is strictly inside `K*`.
    pub fn validate(&self, market: &Market) -> Result<(), PceError> {
        let tree = market.tree();
        if self.t >= tree.horizon() {
            return Err(PceError::BadTime {
                t: self.t,
                horizon: tree.horizon(),
            });
        }
        if self.y.len() != tree.len() || self.measure.kernels().len() != tree.len() {
            return Err(TreeError::Length {
                what: "request".into(),
                expected: tree.len(),
                got: self.y.len().min(self.measure.kernels().len()),
            }
            .into());
        }
        let mass = self.measure.node_masses(tree);
        for id in tree.ids() {
            if tree.is_terminal(id) || mass[id.0].is_zero() {
                continue;
            }
            let k = self
                .measure
                .kernel(id)
                .ok_or_else(|| PceError::MissingKernel(market.label(id)))?;
            if !market.in_model_hull(id, k) {
                return Err(PceError::NotAModel(market.label(id)));
            }
        }
        for id in tree.nodes_at(self.t) {
            if mass[id.0].is_zero() {
                continue;
            }
            let y = self.y[id.0]
                .as_ref()
                .ok_or_else(|| PceError::MissingY(market.label(id)))?;
            let margin = market.dual(id).interior_margin(y)?;
            if !margin.is_positive() {
                return Err(PceError::NotInterior {
                    node: market.label(id),
                    y: y.clone(),
                    margin,
                });
            }
        }
        Ok(())
    }
}

/// A measure `Q` with a `Q`-martingale `Z` of strictly interior dual vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceSystem {
    pub t: usize,
    pub q: TreeMeasure,
    /// Price vector at every node of time `>= t` with positive `Q`-mass.
    pub z: Vec<Option<Vec<Rat>>>,
    /// Model kernel dominating `Q`'s kernel, at every node carrying a price
    /// vector that is not terminal.
    pub r_witness: Vec<Option<Kernel>>,
}

impl PriceSystem {
    pub fn z_at(&self, id: NodeId) -> Option<&Vec<Rat>> {
        self.z.get(id.0).and_then(Option::as_ref)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObstructionKind {
    /// `y` lies on the boundary of the attainable cone.
    ZeroMargin,
    /// `y` lies outside the attainable cone.
    NotInCone,
}

/// A position solvent at every reachable child whose value under `y` is not
/// positive: no split of `y` into interior child prices exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obstruction {
    pub kind: ObstructionKind,
    pub zeta: Vec<Rat>,
}

impl Obstruction {
    pub fn verify(&self, market: &Market, node: NodeId, y: &[Rat]) -> Result<bool, PceError> {
        if self.zeta.len() != market.assets() || is_zero_vec(&self.zeta) {
            return Ok(false);
        }
        if !market.support_cone(node)?.contains_via_normals(&self.zeta)? {
            return Ok(false);
        }
        let v = dot(&self.zeta, y);
        Ok(match self.kind {
            ObstructionKind::ZeroMargin => !v.is_positive(),
            ObstructionKind::NotInCone => v.is_negative(),
        })
    }
}

/// Successful one-step split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    /// Kernel over all children of the node; zero off the reachable set.
    pub kernel: Kernel,
    /// Reachable children, in branch order.
    pub children: Vec<NodeId>,
    /// Summands `w_k`, parallel to `children`.
    pub w: Vec<Vec<Rat>>,
    /// Price vectors `z_k = w_k / q_k`, parallel to `children`.
    pub z: Vec<Vec<Rat>>,
    pub margin: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OneStep {
    Extended(Extension),
    Infeasible(Obstruction),
}

impl OneStep {
    pub fn is_extended(&self) -> bool {
        matches!(self, OneStep::Extended(_))
    }
}

/// Splits `y` (strictly inside `K*` at `node`) over all reachable children.
/// `mandatory` lists branch indices that must carry mass; the split always
/// uses the whole reachable set, so it only has to lie inside it.
pub fn one_step_extend(market: &Market, node: NodeId, y: &[Rat], mandatory: &[usize]) -> Result<OneStep, PceError> {
    check_step(market, node, mandatory)?;
    let margin = market.dual(node).interior_margin(y)?;
    if !margin.is_positive() {
        return Err(PceError::NotInterior {
            node: market.label(node),
            y: y.to_vec(),
            margin,
        });
    }
    Ok(split(market, node, y))
}

/// Whether `z` is `E^R[Y]` for some model `R` dominating the kernel `p` and
/// some strictly interior `Y` one step ahead.
pub fn theta_membership(market: &Market, node: NodeId, p: &[Rat], z: &[Rat]) -> Result<bool, PceError> {
    if market.tree().is_terminal(node) {
        return Err(PceError::Terminal(market.label(node)));
    }
    if !market.in_model_hull(node, p) {
        return Err(PceError::NotAModel(market.label(node)));
    }
    if z.len() != market.assets() {
        return Err(ConeError::DimensionMismatch {
            expected: market.assets(),
            got: z.len(),
        }
        .into());
    }
    Ok(split(market, node, z).is_extended())
}

fn check_step(market: &Market, node: NodeId, mandatory: &[usize]) -> Result<(), PceError> {
    if market.tree().is_terminal(node) {
        return Err(PceError::Terminal(market.label(node)));
    }
    let reachable = market.reachable_set(node)?;
    if let Some(&branch) = mandatory.iter().find(|b| !reachable.contains(b)) {
        return Err(PceError::Unreachable {
            node: market.label(node),
            branch,
        });
    }
    Ok(())
}

fn split(market: &Market, node: NodeId, y: &[Rat]) -> OneStep {
    let d = market.assets();
    let children = market
        .reachable_children(node)
        .expect("node is non-terminal");
    let m = children.len();
    let eps = m * d;
    // Variables: w_0 (d entries), ..., w_{m-1}, eps; all nonnegative.
    let mut objective = zeros(eps + 1);
    objective[eps] = Rat::one();
    let mut lp = LinearProgram::new(Direction::Maximize, objective);
    for (k, child) in children.iter().enumerate() {
        let normals = market.dual(*child).normals().expect("dual cones carry normals");
        for n in normals {
            let mut row = zeros(eps + 1);
            row[k * d..(k + 1) * d].clone_from_slice(n);
            row[eps] = -Rat::one();
            lp.add(row, Sense::Ge, Rat::zero());
        }
    }
    let inequality_rows = lp.constraints.len();
    for i in 0..d {
        let mut row = zeros(eps + 1);
        for k in 0..m {
            row[k * d + i] = Rat::one();
        }
        lp.add(row, Sense::Eq, y[i].clone());
    }

    match lp_solve(&lp).expect("split program is well formed") {
        LpOutcome::Optimal { point, value, dual } => {
            if !value.is_positive() {
                return OneStep::Infeasible(Obstruction {
                    kind: ObstructionKind::ZeroMargin,
                    zeta: dual[inequality_rows..].to_vec(),
                });
            }
            let w: Vec<Vec<Rat>> = (0..m).map(|k| point[k * d..(k + 1) * d].to_vec()).collect();
            let y1 = y[0].recip();
            let mut kernel = zeros(market.tree().children(node).len());
            let mut z = Vec::with_capacity(m);
            for (k, child) in children.iter().enumerate() {
                let q = &w[k][0] * &y1;
                z.push(scale(&w[k], &q.recip()));
                kernel[market.tree().branch(*child)] = q;
            }
            OneStep::Extended(Extension {
                kernel,
                children,
                w,
                z,
                margin: value,
            })
        }
        LpOutcome::Infeasible { farkas } => OneStep::Infeasible(Obstruction {
            kind: ObstructionKind::NotInCone,
            zeta: neg(&farkas[inequality_rows..]),
        }),
        LpOutcome::Unbounded { .. } => unreachable!("eps is bounded by the first coordinate of y"),
    }
}

/// Forward construction with a cache of one-step splits keyed by node and
/// start vector. Splits do not depend on `P`, so one builder can serve many
/// requests on the same market.
pub struct PceBuilder<'a> {
    market: &'a Market,
    cache: HashMap<(NodeId, Vec<Rat>), OneStep>,
}

impl<'a> PceBuilder<'a> {
    pub fn new(market: &'a Market) -> Self {
        Self {
            market,
            cache: HashMap::new(),
        }
    }

    pub fn market(&self) -> &'a Market {
        self.market
    }

    pub fn cached_steps(&self) -> usize {
        self.cache.len()
    }

    /// Cached [`one_step_extend`] without the interiority precondition.
    pub fn step(&mut self, node: NodeId, y: &[Rat]) -> &OneStep {
        let market = self.market;
        self.cache
            .entry((node, y.to_vec()))
            .or_insert_with(|| split(market, node, y))
    }

    pub fn build(&mut self, req: &ExtensionRequest) -> Result<PriceSystem, PceError> {
        req.validate(self.market)?;
        let market = self.market;
        let tree = market.tree();
        let p_mass = req.measure.node_masses(tree);

        let mut q = req.measure.clone();
        let mut z: Vec<Option<Vec<Rat>>> = vec![None; tree.len()];
        let mut r_witness: Vec<Option<Kernel>> = vec![None; tree.len()];
        for id in tree.nodes_at(req.t) {
            if p_mass[id.0].is_positive() {
                z[id.0] = req.y[id.0].clone();
            }
        }
        // Breadth-first ids: a node's price is known before it is split.
        for id in tree.ids() {
            if tree.time(id) < req.t || tree.is_terminal(id) {
                continue;
            }
            let Some(y) = z[id.0].clone() else { continue };
            let ext = match self.step(id, &y) {
                OneStep::Extended(ext) => ext.clone(),
                OneStep::Infeasible(obstruction) => {
                    return Err(PceError::NoExtension {
                        node: market.label(id),
                        obstruction: obstruction.clone(),
                    })
                }
            };
            for (child, zc) in ext.children.iter().zip(ext.z) {
                z[child.0] = Some(zc);
            }
            q.set_kernel(id, ext.kernel);
            r_witness[id.0] = market.uniform_mixture(id);
        }
        Ok(PriceSystem {
            t: req.t,
            q,
            z,
            r_witness,
        })
    }
}

/// One-shot [`PceBuilder::build`].
pub fn build_pce(market: &Market, req: &ExtensionRequest) -> Result<PriceSystem, PceError> {
    PceBuilder::new(market).build(req)
}

/// Exact check of the four defining items; one message per violation.
pub fn verify_pce(market: &Market, ps: &PriceSystem, req: &ExtensionRequest) -> Vec<String> {
    let tree = market.tree();
    let mut out = Vec::new();
    if ps.q.kernels().len() != tree.len()
        || ps.z.len() != tree.len()
        || ps.r_witness.len() != tree.len()
        || req.measure.kernels().len() != tree.len()
        || req.y.len() != tree.len()
    {
        out.push("shape: price system or request does not match the tree".to_string());
        return out;
    }
    if ps.t != req.t {
        out.push(format!("shape: price system starts at {} but the request at {}", ps.t, req.t));
    }
    let p_mass = req.measure.node_masses(tree);
    let q_mass = ps.q.node_masses(tree);

    // (i) P << Q << P-family, with R_witness in the hull dominating Q.
    for id in tree.ids() {
        if tree.is_terminal(id) {
            continue;
        }
        let label = market.label(id);
        let q_supp = ps.q.support(id);
        if p_mass[id.0].is_positive() {
            let p_supp = req.measure.support(id);
            if let Some(j) = p_supp.iter().find(|j| !q_supp.contains(j)) {
                out.push(format!("(i) P charges branch {j} of node {label} but Q does not"));
            }
        }
        if q_mass[id.0].is_positive() && tree.time(id) >= req.t {
            let Some(k) = ps.q.kernel(id) else {
                out.push(format!("(i) Q has no kernel at node {label}"));
                continue;
            };
            if k.len() != tree.children(id).len() || k.iter().any(Signed::is_negative) || k.iter().sum::<Rat>() != Rat::one()
            {
                out.push(format!("(i) Q kernel at node {label} is not a probability vector"));
            }
            match ps.r_witness.get(id.0).and_then(Option::as_ref) {
                None => out.push(format!("(i) no dominating model at node {label}")),
                Some(r) => {
                    if !market.in_model_hull(id, r) {
                        out.push(format!("(i) dominating kernel at node {label} is not a model"));
                    } else if let Some(j) = q_supp.iter().find(|&&j| !r[j].is_positive()) {
                        out.push(format!("(i) Q charges branch {j} of node {label} outside the dominating model"));
                    }
                }
            }
        }
    }

    // (ii) Q = P before t and Z_t = Y on the support of P.
    for id in tree.ids() {
        let label = market.label(id);
        let time = tree.time(id);
        if time < req.t && !tree.is_terminal(id) && ps.q.kernel(id) != req.measure.kernel(id) {
            out.push(format!("(ii) Q differs from P at node {label} before the start time"));
        }
        if time == req.t && p_mass[id.0].is_positive() && ps.z_at(id) != req.y[id.0].as_ref() {
            out.push(format!("(ii) Z differs from Y at node {label}"));
        }
    }

    // (iii) interiority and (iv) martingale property on the support of Q.
    for id in tree.ids() {
        if tree.time(id) < req.t || !q_mass[id.0].is_positive() {
            continue;
        }
        let label = market.label(id);
        let Some(zv) = ps.z_at(id) else {
            out.push(format!("(iii) no price vector at node {label}"));
            continue;
        };
        match market.dual(id).interior_margin(zv) {
            Ok(m) if m.is_positive() => {}
            _ => out.push(format!("(iii) not strictly interior at node {label}: {}", show(zv))),
        }
        if tree.is_terminal(id) {
            continue;
        }
        let Some(k) = ps.q.kernel(id) else { continue };
        let mut expected = zeros(market.assets());
        let mut complete = true;
        for (j, child) in tree.children(id).iter().enumerate() {
            if k.get(j).is_none_or(|w| w.is_zero()) {
                continue;
            }
            match ps.z_at(*child) {
                Some(zc) if zc.len() == expected.len() => expected = add(&expected, &scale(zc, &k[j])),
                _ => complete = false,
            }
        }
        if complete && &expected != zv {
            out.push(format!(
                "(iv) martingale identity fails at node {label}: E[Z'] = {} but Z = {}",
                show(&expected),
                show(zv)
            ));
        }
    }
    out
}

/// `sum_k q_k <Z(child_k), zeta>` and `<Z(node), zeta>`, for `zeta` solvent at
/// every `Q`-supported child of `node`.
pub fn easy_direction_sides(market: &Market, ps: &PriceSystem, node: NodeId, zeta: &[Rat]) -> Result<(Rat, Rat), PceError> {
    let tree = market.tree();
    if tree.is_terminal(node) {
        return Err(PceError::Terminal(market.label(node)));
    }
    let zt = ps.z_at(node).ok_or_else(|| PceError::NoPrice(market.label(node)))?;
    let k = ps.q.kernel(node).ok_or_else(|| PceError::MissingKernel(market.label(node)))?;
    let mut lhs = Rat::zero();
    for j in ps.q.support(node) {
        let child = tree.children(node)[j];
        if !market.solvency(child).contains_via_normals(zeta)? {
            return Err(PceError::NotSolventAhead {
                node: market.label(node),
                zeta: zeta.to_vec(),
            });
        }
        let zc = ps.z_at(child).ok_or_else(|| PceError::NoPrice(market.label(child)))?;
        lhs += &k[j] * dot(zc, zeta);
    }
    Ok((lhs, dot(zt, zeta)))
}

/// True iff the conditional expectation of `<Z', zeta>` equals `<Z, zeta>`
/// exactly and is nonnegative.
pub fn easy_direction_check(market: &Market, ps: &PriceSystem, node: NodeId, zeta: &[Rat]) -> Result<bool, PceError> {
    let (lhs, rhs) = easy_direction_sides(market, ps, node, zeta)?;
    Ok(lhs == rhs && !rhs.is_negative())
}
