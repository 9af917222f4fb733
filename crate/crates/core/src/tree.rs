//! Finite event trees carrying a bid-ask process and a family of one-step models.
//!
//! Every non-terminal node holds a finite list of extreme kernels (probability
//! vectors over its children); the model set at the node is their convex hull.
//! Quasi-sure statements only depend on the union of the kernels' supports, so
//! the hull itself is never enumerated.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{cone_intersection, BidAskMatrix, ConeError, NodeCones, PolyCone};
use crate::lp::{lp_feasible, LinearProgram, Sense};
use crate::rational::{format_rat, show, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One-step probability vector over a node's children.
pub type Kernel = Vec<Rat>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("node {0} at time {1} must have at least one successor")]
    Childless(String, usize),
    #[error("terminal node {0} cannot have successors")]
    TerminalWithChildren(String),
    #[error("child-count list has {got} entries but the tree needs {expected}")]
    CountMismatch { expected: usize, got: usize },
    #[error("{what}: expected {expected} entries, got {got}")]
    Length {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("node {0} is terminal")]
    Terminal(String),
    #[error("node {0} has no extreme kernels")]
    NoKernels(String),
    #[error("kernel at node {node} is not a model selection (outside the convex hull of the extreme kernels)")]
    NotAModelSelection { node: String },
    #[error("no node at path {0}")]
    UnknownPath(String),
    #[error("all bid-ask matrices must share one dimension: node {node} has {got}, expected {expected}")]
    AssetCount {
        node: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Cone(#[from] ConeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TreeNode {
    parent: Option<NodeId>,
    time: usize,
    branch: usize,
    children: Vec<NodeId>,
}

/// Rooted tree whose leaves all sit at depth `horizon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTree {
    horizon: usize,
    nodes: Vec<TreeNode>,
}

impl EventTree {
    /// Builds a tree from per-node child counts listed in breadth-first order.
    pub fn from_child_counts(horizon: usize, counts: &[usize]) -> Result<Self, TreeError> {
        if horizon == 0 {
            return Err(TreeError::ZeroHorizon);
        }
        let mut nodes = vec![TreeNode {
            parent: None,
            time: 0,
            branch: 0,
            children: Vec::new(),
        }];
        let mut cursor = 0;
        while cursor < nodes.len() {
            let count = *counts.get(cursor).ok_or(TreeError::CountMismatch {
                expected: cursor + 1,
                got: counts.len(),
            })?;
            let time = nodes[cursor].time;
            if time == horizon && count > 0 {
                return Err(TreeError::TerminalWithChildren(label_of(&nodes, NodeId(cursor))));
            }
            if time < horizon && count == 0 {
                return Err(TreeError::Childless(label_of(&nodes, NodeId(cursor)), time));
            }
            for b in 0..count {
                let id = NodeId(nodes.len());
                nodes.push(TreeNode {
                    parent: Some(NodeId(cursor)),
                    time: time + 1,
                    branch: b,
                    children: Vec::new(),
                });
                nodes[cursor].children.push(id);
            }
            cursor += 1;
        }
        if counts.len() != nodes.len() {
            return Err(TreeError::CountMismatch {
                expected: nodes.len(),
                got: counts.len(),
            });
        }
        Ok(Self { horizon, nodes })
    }

    /// Homogeneous tree: every non-terminal node has `branching` children.
    pub fn uniform(horizon: usize, branching: usize) -> Result<Self, TreeError> {
        let mut counts = Vec::new();
        let mut level = 1usize;
        for _ in 0..horizon {
            counts.extend(std::iter::repeat_n(branching, level));
            level *= branching;
        }
        counts.extend(std::iter::repeat_n(0, level));
        Self::from_child_counts(horizon, &counts)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn time(&self, id: NodeId) -> usize {
        self.nodes[id.0].time
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    pub fn branch(&self, id: NodeId) -> usize {
        self.nodes[id.0].branch
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    pub fn is_terminal(&self, id: NodeId) -> bool {
        self.nodes[id.0].time == self.horizon
    }

    pub fn child_counts(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.children.len()).collect()
    }

    pub fn nodes_at(&self, t: usize) -> Vec<NodeId> {
        self.ids().filter(|&id| self.time(id) == t).collect()
    }

    pub fn non_terminal(&self) -> Vec<NodeId> {
        self.ids().filter(|&id| !self.is_terminal(id)).collect()
    }

    /// Branch indices from the root down to `id`.
    pub fn path(&self, id: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            out.push(self.branch(cur));
            cur = p;
        }
        out.reverse();
        out
    }

    /// `"/"` for the root, `"/0/2"` for the third child of the root's first child.
    pub fn label(&self, id: NodeId) -> String {
        label_of(&self.nodes, id)
    }

    pub fn find(&self, path: &[usize]) -> Option<NodeId> {
        let mut cur = self.root();
        for &b in path {
            cur = *self.children(cur).get(b)?;
        }
        Some(cur)
    }

    pub fn find_label(&self, label: &str) -> Result<NodeId, TreeError> {
        let path = parse_label(label).ok_or_else(|| TreeError::UnknownPath(label.to_string()))?;
        self.find(&path).ok_or_else(|| TreeError::UnknownPath(label.to_string()))
    }

    /// Terminal descendants of `id` (itself when terminal).
    pub fn leaves_below(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if self.is_terminal(n) {
                out.push(n);
            } else {
                stack.extend(self.children(n).iter().rev());
            }
        }
        out
    }

    /// Nodes on the path from the root to `id`, inclusive.
    pub fn ancestry(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }
}

fn label_of(nodes: &[TreeNode], id: NodeId) -> String {
    let mut parts = Vec::new();
    let mut cur = id;
    while let Some(p) = nodes[cur.0].parent {
        parts.push(nodes[cur.0].branch.to_string());
        cur = p;
    }
    parts.reverse();
    format!("/{}", parts.join("/"))
}

pub fn parse_label(label: &str) -> Option<Vec<usize>> {
    let rest = label.strip_prefix('/')?;
    if rest.is_empty() {
        return Some(Vec::new());
    }
    rest.split('/').map(|p| p.parse().ok()).collect()
}

/// Extreme one-step kernels at every node (empty at terminal nodes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFamily {
    kernels: Vec<Vec<Kernel>>,
}

impl ModelFamily {
    pub fn new(kernels: Vec<Vec<Kernel>>) -> Self {
        Self { kernels }
    }

    /// The same list of kernels at every non-terminal node.
    pub fn homogeneous(tree: &EventTree, kernels: &[Kernel]) -> Self {
        Self {
            kernels: tree
                .ids()
                .map(|id| {
                    if tree.is_terminal(id) {
                        Vec::new()
                    } else {
                        kernels.to_vec()
                    }
                })
                .collect(),
        }
    }

    pub fn extremes(&self, id: NodeId) -> &[Kernel] {
        &self.kernels[id.0]
    }

    pub fn all(&self) -> &[Vec<Kernel>] {
        &self.kernels
    }
}

/// Tree, bid-ask process and model family, plus precomputed cones per node.
#[derive(Debug, Clone)]
pub struct Market {
    tree: EventTree,
    bidask: Vec<BidAskMatrix>,
    models: ModelFamily,
    cones: Vec<NodeCones>,
}

impl Market {
    /// Checks the shapes (one matrix per node, one kernel entry per child) and
    /// precomputes the cones. Economic conditions are left to [`Market::validate`].
    pub fn new(tree: EventTree, bidask: Vec<BidAskMatrix>, models: ModelFamily) -> Result<Self, TreeError> {
        if bidask.len() != tree.len() {
            return Err(TreeError::Length {
                what: "bid-ask process".into(),
                expected: tree.len(),
                got: bidask.len(),
            });
        }
        if models.kernels.len() != tree.len() {
            return Err(TreeError::Length {
                what: "model family".into(),
                expected: tree.len(),
                got: models.kernels.len(),
            });
        }
        let d = bidask[0].dim();
        for id in tree.ids() {
            let pi = &bidask[id.0];
            if pi.dim() != d {
                return Err(TreeError::AssetCount {
                    node: tree.label(id),
                    expected: d,
                    got: pi.dim(),
                });
            }
            let ks = &models.kernels[id.0];
            if tree.is_terminal(id) {
                if !ks.is_empty() {
                    return Err(TreeError::Length {
                        what: format!("kernels at terminal node {}", tree.label(id)),
                        expected: 0,
                        got: ks.len(),
                    });
                }
                continue;
            }
            if ks.is_empty() {
                return Err(TreeError::NoKernels(tree.label(id)));
            }
            let b = tree.children(id).len();
            for k in ks {
                if k.len() != b {
                    return Err(TreeError::Length {
                        what: format!("kernel at node {}", tree.label(id)),
                        expected: b,
                        got: k.len(),
                    });
                }
            }
        }
        let cones = bidask.iter().map(NodeCones::new).collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            tree,
            bidask,
            models,
            cones,
        })
    }

    pub fn tree(&self) -> &EventTree {
        &self.tree
    }

    pub fn assets(&self) -> usize {
        self.bidask[0].dim()
    }

    pub fn bidask(&self, id: NodeId) -> &BidAskMatrix {
        &self.bidask[id.0]
    }

    pub fn bidask_process(&self) -> &[BidAskMatrix] {
        &self.bidask
    }

    pub fn models(&self) -> &ModelFamily {
        &self.models
    }

    pub fn cones(&self, id: NodeId) -> &NodeCones {
        &self.cones[id.0]
    }

    /// Solvency cone `K` at the node (generators and normals).
    pub fn solvency(&self, id: NodeId) -> &PolyCone {
        &self.cones[id.0].solvency
    }

    /// Dual cone `K*` at the node (normals and extreme rays).
    pub fn dual(&self, id: NodeId) -> &PolyCone {
        &self.cones[id.0].dual
    }

    pub fn label(&self, id: NodeId) -> String {
        self.tree.label(id)
    }

    /// Structural and economic checks. Violations make the instance unusable;
    /// warnings (triangle inequality) do not.
    pub fn validate(&self, declared_bound: Option<&Rat>) -> ValidationReport {
        let mut report = ValidationReport::default();
        for id in self.tree.ids() {
            let label = self.label(id);
            let pi = &self.bidask[id.0];
            if !pi.efficient_friction() {
                report.violations.push(Issue::new(
                    &label,
                    "(2.3)",
                    format!("(2.3) fails at node {label}: some round trip pi_ij * pi_ji <= 1"),
                ));
            }
            if let Some(c) = declared_bound {
                let computed = pi.roundtrip_bound();
                if &computed > c {
                    report.violations.push(Issue::new(
                        &label,
                        "(2.2)",
                        format!(
                            "(2.2) declared bound c = {} is below the computed round-trip bound {} at node {label}",
                            format_rat(c),
                            format_rat(&computed)
                        ),
                    ));
                }
            }
            for (i, k, j) in pi.triangle_violations() {
                report.warnings.push(Issue::new(
                    &label,
                    "triangle",
                    format!(
                        "direct exchange {i}->{j} costs more than via {k} at node {label}"
                    ),
                ));
            }
            for (n, kernel) in self.models.kernels[id.0].iter().enumerate() {
                if kernel.iter().any(Signed::is_negative) {
                    report.violations.push(Issue::new(
                        &label,
                        "kernel",
                        format!("kernel {n} at node {label} has a negative entry: {}", show(kernel)),
                    ));
                }
                let total: Rat = kernel.iter().sum();
                if !total.is_one() {
                    report.violations.push(Issue::new(
                        &label,
                        "kernel",
                        format!(
                            "kernel {n} at node {label} does not sum to 1 (sum {})",
                            format_rat(&total)
                        ),
                    ));
                }
            }
        }
        report
    }

    /// Children carrying positive mass under some extreme kernel, as branch indices.
    pub fn reachable_set(&self, id: NodeId) -> Result<Vec<usize>, TreeError> {
        if self.tree.is_terminal(id) {
            return Err(TreeError::Terminal(self.label(id)));
        }
        let b = self.tree.children(id).len();
        Ok((0..b)
            .filter(|&j| self.models.kernels[id.0].iter().any(|k| k[j].is_positive()))
            .collect())
    }

    pub fn reachable_children(&self, id: NodeId) -> Result<Vec<NodeId>, TreeError> {
        let children = self.tree.children(id);
        Ok(self.reachable_set(id)?.into_iter().map(|j| children[j]).collect())
    }

    /// Whether the node is null under every model: some edge on its root path
    /// leaves the parent's reachable set.
    pub fn is_polar(&self, id: NodeId) -> bool {
        let mut cur = id;
        while let Some(p) = self.tree.parent(cur) {
            let j = self.tree.branch(cur);
            if !self.models.kernels[p.0].iter().any(|k| k[j].is_positive()) {
                return true;
            }
            cur = p;
        }
        false
    }

    /// `Lambda_t(node)`: intersection of the solvency cones of all reachable children.
    pub fn support_cone(&self, id: NodeId) -> Result<PolyCone, TreeError> {
        let children = self.reachable_children(id)?;
        let cones: Vec<&PolyCone> = children.iter().map(|c| self.solvency(*c)).collect();
        Ok(cone_intersection(&cones)?)
    }

    /// Extreme rays of `K*` at every reachable child, concatenated. They
    /// generate the dual of the support cone.
    pub fn successor_dual_rays(&self, id: NodeId) -> Result<Vec<Vec<Rat>>, TreeError> {
        let mut out = Vec::new();
        for c in self.reachable_children(id)? {
            for r in self.cones(c).dual_rays() {
                if !out.contains(r) {
                    out.push(r.clone());
                }
            }
        }
        Ok(out)
    }

    /// Whether `kernel` is a convex combination of the node's extreme kernels.
    pub fn in_model_hull(&self, id: NodeId, kernel: &[Rat]) -> bool {
        let extremes = &self.models.kernels[id.0];
        if extremes.is_empty() || kernel.len() != self.tree.children(id).len() {
            return false;
        }
        // Extreme kernels and their uniform mixture are the common cases.
        if extremes.iter().any(|k| k.as_slice() == kernel) || self.uniform_mixture(id).as_deref() == Some(kernel) {
            return true;
        }
        let mut lp = LinearProgram::feasibility(extremes.len());
        lp.add(vec![Rat::one(); extremes.len()], Sense::Eq, Rat::one());
        for (j, target) in kernel.iter().enumerate() {
            lp.add(extremes.iter().map(|k| k[j].clone()).collect(), Sense::Eq, target.clone());
        }
        lp_feasible(&lp).expect("hull program is well formed").is_feasible()
    }

    /// Uniform mixture of the node's extreme kernels; its support is the reachable set.
    pub fn uniform_mixture(&self, id: NodeId) -> Option<Kernel> {
        let extremes = &self.models.kernels[id.0];
        if extremes.is_empty() {
            return None;
        }
        let w = Rat::from_integer((extremes.len() as i64).into()).recip();
        let b = extremes[0].len();
        Some(
            (0..b)
                .map(|j| extremes.iter().fold(Rat::zero(), |acc, k| acc + &k[j]) * &w)
                .collect(),
        )
    }

    /// `P = P_0 (x) ... (x) P_{T-1}` from one kernel per non-terminal node.
    pub fn product_measure(&self, selection: Vec<Option<Kernel>>) -> Result<TreeMeasure, TreeError> {
        if selection.len() != self.tree.len() {
            return Err(TreeError::Length {
                what: "kernel selection".into(),
                expected: self.tree.len(),
                got: selection.len(),
            });
        }
        for id in self.tree.ids() {
            match (&selection[id.0], self.tree.is_terminal(id)) {
                (None, true) => {}
                (Some(_), true) => return Err(TreeError::Terminal(self.label(id))),
                (None, false) => return Err(TreeError::NotAModelSelection { node: self.label(id) }),
                (Some(k), false) => {
                    if !self.in_model_hull(id, k) {
                        return Err(TreeError::NotAModelSelection { node: self.label(id) });
                    }
                }
            }
        }
        Ok(TreeMeasure { kernels: selection })
    }

    /// The measure built from the uniform mixture at every node.
    pub fn uniform_measure(&self) -> TreeMeasure {
        TreeMeasure {
            kernels: self.tree.ids().map(|id| self.uniform_mixture(id)).collect(),
        }
    }

    /// The measure choosing extreme kernel `choice[node]` at every non-terminal node.
    pub fn extreme_measure(&self, choice: &[usize]) -> TreeMeasure {
        TreeMeasure {
            kernels: self
                .tree
                .ids()
                .map(|id| {
                    let ks = &self.models.kernels[id.0];
                    (!ks.is_empty()).then(|| ks[choice[id.0] % ks.len()].clone())
                })
                .collect(),
        }
    }
}

/// Outcome of [`Market::validate`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub node: String,
    pub condition: String,
    pub message: String,
}

impl Issue {
    fn new(node: &str, condition: &str, message: String) -> Self {
        Self {
            node: node.to_string(),
            condition: condition.to_string(),
            message,
        }
    }
}

/// One kernel per non-terminal node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeMeasure {
    kernels: Vec<Option<Kernel>>,
}

impl TreeMeasure {
    /// Wraps kernels without checking them against a model family.
    pub fn from_kernels(kernels: Vec<Option<Kernel>>) -> Self {
        Self { kernels }
    }

    pub fn kernel(&self, id: NodeId) -> Option<&Kernel> {
        self.kernels.get(id.0).and_then(Option::as_ref)
    }

    pub fn kernels(&self) -> &[Option<Kernel>] {
        &self.kernels
    }

    pub fn set_kernel(&mut self, id: NodeId, kernel: Kernel) {
        self.kernels[id.0] = Some(kernel);
    }

    /// Probability of reaching each node (product of edge weights).
    pub fn node_masses(&self, tree: &EventTree) -> Vec<Rat> {
        let mut mass = vec![Rat::zero(); tree.len()];
        mass[0] = Rat::one();
        // Breadth-first ids: parents always precede children.
        for id in tree.ids() {
            if mass[id.0].is_zero() || tree.is_terminal(id) {
                continue;
            }
            let Some(k) = self.kernel(id) else { continue };
            let m = mass[id.0].clone();
            for (j, c) in tree.children(id).iter().enumerate() {
                mass[c.0] = &m * &k[j];
            }
        }
        mass
    }

    pub fn leaf_masses(&self, tree: &EventTree) -> Vec<(NodeId, Rat)> {
        let mass = self.node_masses(tree);
        tree.ids()
            .filter(|&id| tree.is_terminal(id))
            .map(|id| (id, mass[id.0].clone()))
            .collect()
    }

    /// Children with positive kernel weight, as branch indices.
    pub fn support(&self, id: NodeId) -> Vec<usize> {
        self.kernel(id)
            .map(|k| (0..k.len()).filter(|&j| k[j].is_positive()).collect())
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn flat_market(horizon: usize, rate: i64, kernels: &[Kernel]) -> Market {
        let b = kernels[0].len();
        let tree = EventTree::uniform(horizon, b).unwrap();
        let pi = BidAskMatrix::uniform(2, int(rate)).unwrap();
        let bidask = vec![pi; tree.len()];
        let models = ModelFamily::homogeneous(&tree, kernels);
        Market::new(tree, bidask, models).unwrap()
    }

    #[test]
    fn tree_shapes() {
        let t = EventTree::uniform(2, 2).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.nodes_at(2).len(), 4);
        assert_eq!(t.label(NodeId(0)), "/");
        assert_eq!(t.label(NodeId(4)), "/0/1");
        assert_eq!(t.find_label("/1/0").unwrap(), NodeId(5));
        assert_eq!(t.path(NodeId(6)), vec![1, 1]);
        assert!(matches!(
            EventTree::from_child_counts(1, &[0]),
            Err(TreeError::Childless(..))
        ));
        assert!(matches!(
            EventTree::from_child_counts(1, &[1, 1, 0]),
            Err(TreeError::TerminalWithChildren(_))
        ));
        // Variable branching.
        let t = EventTree::from_child_counts(2, &[2, 1, 3, 0, 0, 0, 0]).unwrap();
        assert_eq!(t.leaves_below(t.root()).len(), 4);
    }

    #[test]
    fn reachable_and_polar() {
        let half = rat(1, 2);
        let m = flat_market(
            1,
            2,
            &[
                vec![half.clone(), half.clone(), int(0)],
                vec![int(0), half.clone(), half.clone()],
            ],
        );
        assert_eq!(m.reachable_set(NodeId(0)).unwrap(), vec![0, 1, 2]);

        let m = flat_market(2, 2, &[vec![int(1), int(0)]]);
        assert_eq!(m.reachable_set(NodeId(0)).unwrap(), vec![0]);
        assert!(!m.is_polar(NodeId(0)));
        assert!(!m.is_polar(NodeId(1)));
        assert!(m.is_polar(NodeId(2)));
        // Grandchild of the polar node.
        let g = m.tree().find(&[1, 0]).unwrap();
        assert!(m.is_polar(g));
        assert!(matches!(m.reachable_set(g), Err(TreeError::Terminal(_))));

        let m = flat_market(1, 2, &[vec![int(1), int(0)], vec![int(0), int(1)]]);
        assert_eq!(m.reachable_set(NodeId(0)).unwrap(), vec![0, 1]);
    }

    fn two_child_market(child_rates: [i64; 2], kernels: &[Kernel]) -> Market {
        let tree = EventTree::uniform(1, 2).unwrap();
        let bidask = vec![
            BidAskMatrix::uniform(2, int(2)).unwrap(),
            BidAskMatrix::uniform(2, int(child_rates[0])).unwrap(),
            BidAskMatrix::uniform(2, int(child_rates[1])).unwrap(),
        ];
        let models = ModelFamily::homogeneous(&tree, kernels);
        Market::new(tree, bidask, models).unwrap()
    }

    #[test]
    fn support_cone_examples() {
        let k3 = BidAskMatrix::uniform(2, int(3)).unwrap().solvency_cone();
        let k2 = BidAskMatrix::uniform(2, int(2)).unwrap().solvency_cone();
        let half = rat(1, 2);
        let m = two_child_market([2, 3], &[vec![half.clone(), half.clone()]]);
        let lambda = m.support_cone(NodeId(0)).unwrap();
        for g in k3.generators().unwrap() {
            assert!(lambda.contains(g).unwrap());
        }
        assert!(!lambda.contains(&[int(2), int(-1)]).unwrap());

        let m = two_child_market([2, 3], &[vec![int(1), int(0)]]);
        let lambda = m.support_cone(NodeId(0)).unwrap();
        for g in k2.generators().unwrap() {
            assert!(lambda.contains(g).unwrap());
        }

        let m = two_child_market([2, 2], &[vec![half.clone(), half]]);
        let lambda = m.support_cone(NodeId(0)).unwrap();
        assert_eq!(lambda.extreme_rays().unwrap().len(), 2);
        for g in k2.generators().unwrap() {
            assert!(lambda.contains(g).unwrap());
        }
    }

    #[test]
    fn product_measures() {
        let half = rat(1, 2);
        let m = flat_market(2, 2, &[vec![half.clone(), half.clone()]]);
        let p = m.uniform_measure();
        for (_, mass) in p.leaf_masses(m.tree()) {
            assert_eq!(mass, rat(1, 4));
        }

        let m = flat_market(2, 2, &[vec![int(1), int(0)], vec![half.clone(), half.clone()]]);
        let p = m.extreme_measure(&vec![0; m.tree().len()]);
        let masses = p.leaf_masses(m.tree());
        assert_eq!(masses.iter().filter(|(_, v)| v.is_positive()).count(), 1);
        assert_eq!(masses.iter().map(|(_, v)| v.clone()).sum::<Rat>(), int(1));

        let mixed = vec![rat(7, 8), rat(1, 8)];
        let mut sel: Vec<Option<Kernel>> = m
            .tree()
            .ids()
            .map(|id| (!m.tree().is_terminal(id)).then(|| mixed.clone()))
            .collect();
        let p = m.product_measure(sel.clone()).unwrap();
        assert_eq!(p.leaf_masses(m.tree()).iter().map(|(_, v)| v.clone()).sum::<Rat>(), int(1));

        sel[0] = Some(vec![rat(1, 4), rat(3, 4)]);
        assert!(matches!(
            m.product_measure(sel),
            Err(TreeError::NotAModelSelection { .. })
        ));
    }

    #[test]
    fn validation() {
        let half = rat(1, 2);
        let m = flat_market(1, 2, &[vec![half.clone(), half.clone()]]);
        assert!(m.validate(None).is_valid());
        assert!(m.validate(None).warnings.is_empty());

        let tree = EventTree::uniform(1, 2).unwrap();
        let bidask = vec![
            BidAskMatrix::pair(int(2), rat(1, 2)).unwrap(),
            BidAskMatrix::uniform(2, int(2)).unwrap(),
            BidAskMatrix::uniform(2, int(2)).unwrap(),
        ];
        let models = ModelFamily::homogeneous(&tree, &[vec![half.clone(), rat(1, 3)]]);
        let m = Market::new(tree, bidask, models).unwrap();
        let report = m.validate(None);
        assert!(report.violations.iter().any(|v| v.message.starts_with("(2.3) fails at node /")));
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("does not sum to 1")));

        let m = flat_market(1, 2, &[vec![half.clone(), half]]);
        let report = m.validate(Some(&int(3)));
        assert!(report.violations.iter().any(|v| v.condition == "(2.2)"));
        assert!(m.validate(Some(&int(4))).is_valid());
    }

    #[test]
    fn shape_errors() {
        let tree = EventTree::uniform(1, 2).unwrap();
        let pi = BidAskMatrix::uniform(2, int(2)).unwrap();
        let models = ModelFamily::homogeneous(&tree, &[vec![int(1)]]);
        assert!(matches!(
            Market::new(tree.clone(), vec![pi.clone(); 3], models),
            Err(TreeError::Length { .. })
        ));
        let models = ModelFamily::homogeneous(&tree, &[vec![int(1), int(0)]]);
        assert!(matches!(
            Market::new(tree, vec![pi; 2], models),
            Err(TreeError::Length { .. })
        ));
    }
}
