//! JSON documents. Rationals are exact `"p/q"` strings, nodes are named by
//! their path label (`"/"`, `"/0/1"`), and every document carries a schema tag.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::BidAskMatrix;
use crate::cps::{ExtensionRequest, ObstructionKind, PriceSystem};
use crate::na2::{ArbitrageCertificate, Strategy};
use crate::rational::{format_vec, parse_rat, parse_vec, Rat};
use crate::tree::{EventTree, Kernel, Market, ModelFamily, NodeId, TreeMeasure};

use super::gen::GeneratorConfig;

pub const INSTANCE_SCHEMA: &str = "cpslab.instance/1";
pub const PRICE_SYSTEM_SCHEMA: &str = "cpslab.price-system/1";
pub const CERTIFICATE_SCHEMA: &str = "cpslab.certificate/1";
pub const MEASURE_SCHEMA: &str = "cpslab.measure/1";
pub const START_SCHEMA: &str = "cpslab.start/1";
pub const REPORT_SCHEMA: &str = "cpslab.report/1";

#[derive(Debug, Error)]
pub enum DocError {
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("schema: expected {expected:?}, found {found:?}")]
    Schema { expected: &'static str, found: String },
    #[error("node {node}: {message}")]
    Node { node: String, message: String },
    #[error("{0}")]
    Shape(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn node_err(node: &str, message: impl Into<String>) -> DocError {
    DocError::Node {
        node: node.to_string(),
        message: message.into(),
    }
}

/// Parses JSON, reporting the path of the first schema violation.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, DocError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| DocError::Json {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, DocError> {
    let text = std::fs::read_to_string(path).map_err(|source| DocError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DocError> {
    std::fs::write(path, to_json(value)).map_err(|source| DocError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn check_schema(found: &str, expected: &'static str) -> Result<(), DocError> {
    if found == expected {
        Ok(())
    } else {
        Err(DocError::Schema {
            expected,
            found: found.to_string(),
        })
    }
}

fn parse_row(node: &str, what: &str, row: &[String]) -> Result<Vec<Rat>, DocError> {
    parse_vec(row).map_err(|e| node_err(node, format!("{what}: {e}")))
}

fn opt_vec(v: Option<&Vec<Rat>>) -> Option<Vec<String>> {
    v.map(|x| format_vec(x))
}

/// Where an instance came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub generator: GeneratorConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub label: String,
    pub bidask: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernels: Vec<Vec<String>>,
}

/// A market: tree shape (child counts in breadth-first order), one bid-ask
/// matrix per node and the extreme kernels at every non-terminal node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub schema: String,
    pub assets: usize,
    pub horizon: usize,
    pub child_counts: Vec<usize>,
    pub nodes: Vec<NodeDoc>,
    /// Optional user-declared bound `c` on round-trip costs, checked by `validate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_bound: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl InstanceDocument {
    pub fn from_market(market: &Market, metadata: Option<Metadata>) -> Self {
        let tree = market.tree();
        let nodes = tree
            .ids()
            .map(|id| NodeDoc {
                label: tree.label(id),
                bidask: market.bidask(id).entries().iter().map(|r| format_vec(r)).collect(),
                kernels: market.models().extremes(id).iter().map(|k| format_vec(k)).collect(),
            })
            .collect();
        Self {
            schema: INSTANCE_SCHEMA.to_string(),
            assets: market.assets(),
            horizon: tree.horizon(),
            child_counts: tree.child_counts(),
            nodes,
            declared_bound: None,
            metadata,
        }
    }

    pub fn to_market(&self) -> Result<Market, DocError> {
        check_schema(&self.schema, INSTANCE_SCHEMA)?;
        let tree = EventTree::from_child_counts(self.horizon, &self.child_counts)
            .map_err(|e| DocError::Shape(format!("child_counts: {e}")))?;
        if self.nodes.len() != tree.len() {
            return Err(DocError::Shape(format!(
                "{} node entries for a tree with {} nodes",
                self.nodes.len(),
                tree.len()
            )));
        }
        let mut bidask = Vec::with_capacity(tree.len());
        let mut kernels = Vec::with_capacity(tree.len());
        for (id, node) in tree.ids().zip(&self.nodes) {
            let label = tree.label(id);
            if node.label != label {
                return Err(node_err(&node.label, format!("listed where node {label} belongs")));
            }
            if node.bidask.len() != self.assets {
                return Err(node_err(&label, format!("bid-ask matrix has {} rows, expected {}", node.bidask.len(), self.assets)));
            }
            let rows = node
                .bidask
                .iter()
                .enumerate()
                .map(|(i, r)| parse_row(&label, &format!("bid-ask row {i}"), r))
                .collect::<Result<Vec<_>, _>>()?;
            bidask.push(BidAskMatrix::new(rows).map_err(|e| node_err(&label, format!("bid-ask matrix: {e}")))?);
            let b = tree.children(id).len();
            let mut ks: Vec<Kernel> = Vec::with_capacity(node.kernels.len());
            for (n, k) in node.kernels.iter().enumerate() {
                let k = parse_row(&label, &format!("kernel {n}"), k)?;
                if k.len() != b {
                    return Err(node_err(&label, format!("kernel {n} has {} entries for {b} children", k.len())));
                }
                ks.push(k);
            }
            kernels.push(ks);
        }
        Market::new(tree, bidask, ModelFamily::new(kernels)).map_err(|e| DocError::Shape(e.to_string()))
    }

    pub fn declared_bound(&self) -> Result<Option<Rat>, DocError> {
        self.declared_bound
            .as_deref()
            .map(parse_rat)
            .transpose()
            .map_err(|e| DocError::Shape(format!("declared_bound: {e}")))
    }
}

fn node_index(tree: &EventTree, label: &str) -> Result<NodeId, DocError> {
    tree.find_label(label).map_err(|e| node_err(label, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledVector {
    pub node: String,
    pub value: Vec<String>,
}

/// A measure as one kernel per non-terminal node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub schema: String,
    pub kernels: Vec<LabeledVector>,
}

impl MeasureDoc {
    pub fn from_measure(market: &Market, measure: &TreeMeasure) -> Self {
        Self {
            schema: MEASURE_SCHEMA.to_string(),
            kernels: labeled(market, measure.kernels()),
        }
    }

    pub fn to_measure(&self, market: &Market) -> Result<TreeMeasure, DocError> {
        check_schema(&self.schema, MEASURE_SCHEMA)?;
        let slots = unlabel(market, &self.kernels, "kernel")?;
        let tree = market.tree();
        for id in tree.ids() {
            if let Some(k) = &slots[id.0] {
                if k.len() != tree.children(id).len() {
                    return Err(node_err(&tree.label(id), "kernel length differs from the child count"));
                }
            }
        }
        Ok(TreeMeasure::from_kernels(slots))
    }
}

/// Start prices `Y` per node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartDoc {
    pub schema: String,
    pub values: Vec<LabeledVector>,
}

impl StartDoc {
    pub fn to_values(&self, market: &Market) -> Result<Vec<Option<Vec<Rat>>>, DocError> {
        check_schema(&self.schema, START_SCHEMA)?;
        let slots = unlabel(market, &self.values, "price")?;
        if let Some((n, _)) = slots.iter().enumerate().find(|(_, v)| v.as_ref().is_some_and(|v| v.len() != market.assets())) {
            return Err(node_err(&market.label(NodeId(n)), "price vector length differs from the asset count"));
        }
        Ok(slots)
    }
}

fn labeled(market: &Market, values: &[Option<Vec<Rat>>]) -> Vec<LabeledVector> {
    values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| {
            v.as_ref().map(|v| LabeledVector {
                node: market.label(NodeId(i)),
                value: format_vec(v),
            })
        })
        .collect()
}

fn unlabel(market: &Market, items: &[LabeledVector], what: &str) -> Result<Vec<Option<Vec<Rat>>>, DocError> {
    let mut slots = vec![None; market.tree().len()];
    for item in items {
        let id = node_index(market.tree(), &item.node)?;
        if slots[id.0].is_some() {
            return Err(node_err(&item.node, format!("{what} given twice")));
        }
        slots[id.0] = Some(parse_row(&item.node, what, &item.value)?);
    }
    Ok(slots)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceNodeDoc {
    pub node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_witness: Option<Vec<String>>,
}

/// A price system together with the request it answers, so it can be
/// re-verified on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceSystemDoc {
    pub schema: String,
    pub t: usize,
    pub nodes: Vec<PriceNodeDoc>,
}

impl PriceSystemDoc {
    pub fn new(market: &Market, req: &ExtensionRequest, ps: &PriceSystem) -> Self {
        let nodes = market
            .tree()
            .ids()
            .map(|id| PriceNodeDoc {
                node: market.label(id),
                p: opt_vec(req.measure.kernel(id)),
                y: opt_vec(req.y[id.0].as_ref()),
                q: opt_vec(ps.q.kernel(id)),
                z: opt_vec(ps.z_at(id)),
                r_witness: opt_vec(ps.r_witness[id.0].as_ref()),
            })
            .collect();
        Self {
            schema: PRICE_SYSTEM_SCHEMA.to_string(),
            t: ps.t,
            nodes,
        }
    }

    pub fn to_parts(&self, market: &Market) -> Result<(ExtensionRequest, PriceSystem), DocError> {
        check_schema(&self.schema, PRICE_SYSTEM_SCHEMA)?;
        let n = market.tree().len();
        let mut cols: [Vec<Option<Vec<Rat>>>; 5] = std::array::from_fn(|_| vec![None; n]);
        for node in &self.nodes {
            let id = node_index(market.tree(), &node.node)?;
            let fields = [&node.p, &node.y, &node.q, &node.z, &node.r_witness];
            for (col, (field, name)) in fields.iter().zip(["p", "y", "q", "z", "r_witness"]).enumerate() {
                if let Some(v) = field {
                    cols[col][id.0] = Some(parse_row(&node.node, name, v)?);
                }
            }
        }
        let [p, y, q, z, r] = cols;
        let req = ExtensionRequest {
            t: self.t,
            measure: TreeMeasure::from_kernels(p),
            y,
        };
        let ps = PriceSystem {
            t: self.t,
            q: TreeMeasure::from_kernels(q),
            z,
            r_witness: r,
        };
        Ok((req, ps))
    }
}

/// Interior start price that cannot be extended, with the obstruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub y: Vec<String>,
    pub delta: String,
    pub obstruction: String,
    pub obstruction_zeta: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub schema: String,
    pub node: String,
    pub time: usize,
    pub zeta: Vec<String>,
    pub separating_ray: Vec<String>,
    /// Nonzero increments of the global strategy.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strategy: Vec<LabeledVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessDoc>,
}

impl CertificateDoc {
    pub fn new(market: &Market, cert: &ArbitrageCertificate, strategy: Option<&Strategy>) -> Self {
        let strategy = strategy
            .map(|s| {
                let slots: Vec<Option<Vec<Rat>>> = s
                    .increments
                    .iter()
                    .map(|v| (!v.iter().all(num_traits::Zero::is_zero)).then(|| v.clone()))
                    .collect();
                labeled(market, &slots)
            })
            .unwrap_or_default();
        Self {
            schema: CERTIFICATE_SCHEMA.to_string(),
            node: market.label(cert.node),
            time: cert.time,
            zeta: format_vec(&cert.zeta),
            separating_ray: format_vec(&cert.separating_ray),
            strategy,
            witness: None,
        }
    }

    pub fn certificate(&self, market: &Market) -> Result<ArbitrageCertificate, DocError> {
        check_schema(&self.schema, CERTIFICATE_SCHEMA)?;
        Ok(ArbitrageCertificate {
            time: self.time,
            node: node_index(market.tree(), &self.node)?,
            zeta: parse_row(&self.node, "zeta", &self.zeta)?,
            separating_ray: parse_row(&self.node, "separating_ray", &self.separating_ray)?,
        })
    }

    pub fn strategy(&self, market: &Market) -> Result<Strategy, DocError> {
        let slots = unlabel(market, &self.strategy, "increment")?;
        let d = market.assets();
        Ok(Strategy {
            increments: slots
                .into_iter()
                .map(|v| v.unwrap_or_else(|| crate::rational::zeros(d)))
                .collect(),
        })
    }
}

pub fn obstruction_name(kind: ObstructionKind) -> &'static str {
    match kind {
        ObstructionKind::ZeroMargin => "zero-margin",
        ObstructionKind::NotInCone => "not-in-cone",
    }
}

pub fn obstruction_kind(name: &str) -> Option<ObstructionKind> {
    match name {
        "zero-margin" => Some(ObstructionKind::ZeroMargin),
        "not-in-cone" => Some(ObstructionKind::NotInCone),
        _ => None,
    }
}

/// One named cross-check and its outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeStats {
    pub measures: usize,
    pub start_maps: usize,
    pub built: usize,
    pub verified: usize,
    pub easy_direction: usize,
    pub strategy_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub name: String,
    pub instance: InstanceDocument,
    pub verdict: String,
    pub failing_nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<CertificateDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub price_systems: Vec<PriceSystemDoc>,
    pub probes: ProbeStats,
    pub checks: Vec<Check>,
    pub counterexample: bool,
    /// Wall-clock time; the only field that varies between identical runs.
    pub elapsed_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub instances: usize,
    pub holds: usize,
    pub fails: usize,
    pub invalid: usize,
    pub counterexamples: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub probes: usize,
    pub y_probes: usize,
    pub exhaustive: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub settings: ReportSettings,
    pub summary: Summary,
    pub instances: Vec<InstanceReport>,
}

impl ExperimentReport {
    /// Copy with timings zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.instances {
            r.elapsed_us = 0;
        }
        out
    }
}
