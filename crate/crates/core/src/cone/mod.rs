//! Exact polyhedral cones and the bid-ask market geometry built on them.
//!
//! A [`PolyCone`] carries a generator list (V-representation), a list of
//! normals read as `<n, x> >= 0` (H-representation), or both. A
//! [`BidAskMatrix`] produces the solvency cone `K` (generators `e_i` and
//! `pi_ij e_i - e_j`) and its dual `K*` (normals `e_i` and `pi_ij e_i - e_j`
//! read as inequalities on prices).

mod dd;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lp::{lp_feasible, lp_solve, Direction, Feasibility, LinearProgram, LpOutcome, Sense, VarBound};
use crate::rational::{dot, int, is_zero_vec, norm1, normalize_ray, scale, show, unit, Rat};

pub use dd::extreme_rays as extreme_rays_of_normals;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cone is not pointed: it contains the line through {}", show(.line))]
    NotPointed { line: Vec<Rat> },
    #[error("cone has neither generators nor normals")]
    Empty,
    #[error("operation needs an H-representation")]
    NeedsNormals,
    #[error("zero vector has no interior margin")]
    ZeroVector,
    #[error("bid-ask matrix must be d x d with d >= 2, got {rows} rows")]
    BadShape { rows: usize },
    #[error("bid-ask entry ({i},{j}) must be strictly positive, got {value}")]
    NonPositiveRate { i: usize, j: usize, value: Rat },
    #[error("bid-ask diagonal entry ({i},{i}) must be 1, got {value}")]
    BadDiagonal { i: usize, value: Rat },
    #[error("quote not consistent: lambda({i},{j}) = {lambda} < 0")]
    QuoteNotConsistent { i: usize, j: usize, lambda: Rat },
    #[error("quote must be strictly positive")]
    NonPositiveQuote,
    #[error("cone has empty interior (zero-margin certificate {})", show(.certificate))]
    EmptyInterior { certificate: Vec<Rat> },
}

/// Polyhedral cone over exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyCone {
    dim: usize,
    generators: Option<Vec<Vec<Rat>>>,
    normals: Option<Vec<Vec<Rat>>>,
}

impl PolyCone {
    pub fn from_generators(dim: usize, generators: Vec<Vec<Rat>>) -> Result<Self, ConeError> {
        check_dims(dim, &generators)?;
        Ok(Self {
            dim,
            generators: Some(generators),
            normals: None,
        })
    }

    pub fn from_normals(dim: usize, normals: Vec<Vec<Rat>>) -> Result<Self, ConeError> {
        check_dims(dim, &normals)?;
        Ok(Self {
            dim,
            generators: None,
            normals: Some(normals),
        })
    }

    /// Nonnegative orthant in H-representation.
    pub fn orthant(dim: usize) -> Self {
        Self {
            dim,
            generators: None,
            normals: Some((0..dim).map(|i| unit(dim, i)).collect()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> Option<&[Vec<Rat>]> {
        self.generators.as_deref()
    }

    pub fn normals(&self) -> Option<&[Vec<Rat>]> {
        self.normals.as_deref()
    }

    /// The dual cone `{y : <x, y> >= 0 for all x in self}`. Generators become
    /// normals and vice versa.
    pub fn dual(&self) -> PolyCone {
        PolyCone {
            dim: self.dim,
            generators: self.normals.clone(),
            normals: self.generators.clone(),
        }
    }

    /// Extreme rays of an H-represented pointed cone (double description).
    pub fn extreme_rays(&self) -> Result<Vec<Vec<Rat>>, ConeError> {
        let normals = self.normals.as_ref().ok_or(ConeError::NeedsNormals)?;
        dd::extreme_rays(self.dim, normals)
    }

    /// Adds whichever representation is missing.
    pub fn complete(mut self) -> Result<Self, ConeError> {
        match (&self.generators, &self.normals) {
            (Some(_), Some(_)) => {}
            (Some(g), None) => {
                // Facet normals of cone(G) are the extreme rays of its dual {n : <g, n> >= 0}.
                self.normals = Some(dd::extreme_rays(self.dim, g)?);
            }
            (None, Some(n)) => {
                self.generators = Some(dd::extreme_rays(self.dim, n)?);
            }
            (None, None) => return Err(ConeError::Empty),
        }
        Ok(self)
    }

    /// Membership by evaluating every normal. Needs an H-representation.
    pub fn contains_via_normals(&self, x: &[Rat]) -> Result<bool, ConeError> {
        self.check_vec(x)?;
        let normals = self.normals.as_ref().ok_or(ConeError::NeedsNormals)?;
        Ok(normals.iter().all(|n| !dot(n, x).is_negative()))
    }

    /// Membership as feasibility of `sum mu_k g_k = x, mu >= 0`.
    pub fn contains_via_generators(&self, x: &[Rat]) -> Result<bool, ConeError> {
        self.check_vec(x)?;
        let gens = self.generators.as_ref().ok_or(ConeError::Empty)?;
        Ok(conic_combination(gens, x).is_some())
    }

    /// `member_cone`: uses the normals when present, otherwise the generator LP.
    pub fn contains(&self, x: &[Rat]) -> Result<bool, ConeError> {
        if self.normals.is_some() {
            self.contains_via_normals(x)
        } else {
            self.contains_via_generators(x)
        }
    }

    /// Minimum of `<n, y / |y|_1>` over the normals; positive iff `y` is interior.
    pub fn interior_margin(&self, y: &[Rat]) -> Result<Rat, ConeError> {
        self.check_vec(y)?;
        let normals = self.normals.as_ref().ok_or(ConeError::NeedsNormals)?;
        if is_zero_vec(y) {
            return Err(ConeError::ZeroVector);
        }
        let inv = norm1(y).recip();
        let scaled = scale(y, &inv);
        Ok(normals
            .iter()
            .map(|n| dot(n, &scaled))
            .min()
            .unwrap_or_else(Rat::one))
    }

    /// Optimum of `max eps s.t. <n, y> >= eps for all normals, -1 <= y_i <= 1`,
    /// together with the optimal `y`. Positive iff the interior is nonempty.
    pub fn max_margin(&self) -> Result<MarginSolution, ConeError> {
        let normals = self.normals.as_ref().ok_or(ConeError::NeedsNormals)?;
        let d = self.dim;
        if normals.is_empty() {
            return Ok(MarginSolution {
                margin: Rat::one(),
                point: vec![Rat::one(); d],
                certificate: Vec::new(),
            });
        }
        // Variables: y_0..y_{d-1} (free), eps (nonnegative).
        let mut objective = vec![Rat::zero(); d + 1];
        objective[d] = Rat::one();
        let mut lp = LinearProgram::new(Direction::Maximize, objective);
        for i in 0..d {
            lp.set_bound(i, VarBound::Free);
        }
        for n in normals {
            let mut row = n.clone();
            row.push(-Rat::one());
            lp.add(row, Sense::Ge, Rat::zero());
        }
        for i in 0..d {
            let mut row = unit(d + 1, i);
            row[d] = Rat::zero();
            lp.add(row.clone(), Sense::Le, Rat::one());
            lp.add(row, Sense::Ge, -Rat::one());
        }
        match lp_solve(&lp).expect("margin program is well formed") {
            LpOutcome::Optimal { point, value, dual } => {
                // Multipliers on the normal rows, sign-flipped to be nonnegative.
                let certificate = dual[..normals.len()].iter().map(|v| -v).collect();
                Ok(MarginSolution {
                    margin: value,
                    point: point[..d].to_vec(),
                    certificate,
                })
            }
            other => unreachable!("margin program is feasible and bounded: {other:?}"),
        }
    }

    /// A strictly interior point, rescaled so its first coordinate is 1 when
    /// that coordinate is positive (always the case for dual cones inside the
    /// orthant).
    pub fn pick_interior_point(&self) -> Result<Vec<Rat>, ConeError> {
        let sol = self.max_margin()?;
        if !sol.margin.is_positive() {
            return Err(ConeError::EmptyInterior {
                certificate: sol.certificate,
            });
        }
        let y = sol.point;
        if y[0].is_positive() {
            let k = y[0].recip();
            Ok(scale(&y, &k))
        } else {
            Ok(y)
        }
    }

    fn check_vec(&self, x: &[Rat]) -> Result<(), ConeError> {
        if x.len() != self.dim {
            return Err(ConeError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Result of the margin-maximization LP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginSolution {
    pub margin: Rat,
    pub point: Vec<Rat>,
    /// Nonnegative weights on the normals; when `margin` is zero they combine
    /// the normals to the zero vector, which rules out interior points.
    pub certificate: Vec<Rat>,
}

fn check_dims(dim: usize, vs: &[Vec<Rat>]) -> Result<(), ConeError> {
    match vs.iter().find(|v| v.len() != dim) {
        Some(v) => Err(ConeError::DimensionMismatch {
            expected: dim,
            got: v.len(),
        }),
        None => Ok(()),
    }
}

/// Nonnegative weights `mu` with `sum mu_k g_k = x`, if any.
pub fn conic_combination(generators: &[Vec<Rat>], x: &[Rat]) -> Option<Vec<Rat>> {
    if generators.is_empty() {
        return is_zero_vec(x).then(Vec::new);
    }
    let mut lp = LinearProgram::feasibility(generators.len());
    for (i, xi) in x.iter().enumerate() {
        let row = generators.iter().map(|g| g[i].clone()).collect();
        lp.add(row, Sense::Eq, xi.clone());
    }
    match lp_feasible(&lp).expect("conic combination program is well formed") {
        Feasibility::Feasible(mu) => Some(mu),
        Feasibility::Infeasible(_) => None,
    }
}

/// Intersection of H-represented cones: the concatenation of all normals,
/// each normalized and kept once in order of first appearance.
pub fn cone_intersection(cones: &[&PolyCone]) -> Result<PolyCone, ConeError> {
    let first = cones.first().ok_or(ConeError::Empty)?;
    let dim = first.dim;
    let mut normals: Vec<Vec<Rat>> = Vec::new();
    for c in cones {
        if c.dim != dim {
            return Err(ConeError::DimensionMismatch {
                expected: dim,
                got: c.dim,
            });
        }
        for n in c.normals.as_ref().ok_or(ConeError::NeedsNormals)? {
            let n = normalize_ray(n);
            if !normals.contains(&n) {
                normals.push(n);
            }
        }
    }
    PolyCone::from_normals(dim, normals)
}

/// Matrix of exchange rates: `pi[i][j]` units of asset `i` buy one unit of asset `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BidAskMatrix {
    entries: Vec<Vec<Rat>>,
}

impl BidAskMatrix {
    pub fn new(entries: Vec<Vec<Rat>>) -> Result<Self, ConeError> {
        let d = entries.len();
        if d < 2 {
            return Err(ConeError::BadShape { rows: d });
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != d {
                return Err(ConeError::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                if i == j {
                    if !v.is_one() {
                        return Err(ConeError::BadDiagonal { i, value: v.clone() });
                    }
                } else if !v.is_positive() {
                    return Err(ConeError::NonPositiveRate { i, j, value: v.clone() });
                }
            }
        }
        Ok(Self { entries })
    }

    /// All off-diagonal rates equal to `rate`.
    pub fn uniform(d: usize, rate: Rat) -> Result<Self, ConeError> {
        let entries = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { Rat::one() } else { rate.clone() })
                    .collect()
            })
            .collect();
        Self::new(entries)
    }

    /// Two-asset matrix from `pi12` and `pi21`.
    pub fn pair(pi12: Rat, pi21: Rat) -> Result<Self, ConeError> {
        Self::new(vec![vec![Rat::one(), pi12], vec![pi21, Rat::one()]])
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn rate(&self, i: usize, j: usize) -> &Rat {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<Rat>] {
        &self.entries
    }

    fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize)> {
        let d = self.dim();
        (0..d).flat_map(move |i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
    }

    /// Vectors `e_i` followed by `pi_ij e_i - e_j` in row-major `(i, j)` order.
    fn exchange_vectors(&self) -> Vec<Vec<Rat>> {
        let d = self.dim();
        let mut out: Vec<Vec<Rat>> = (0..d).map(|i| unit(d, i)).collect();
        for (i, j) in self.off_diagonal() {
            let mut v = vec![Rat::zero(); d];
            v[i] = self.entries[i][j].clone();
            v[j] = -Rat::one();
            out.push(v);
        }
        out
    }

    /// Solvency cone `K` in V-representation.
    pub fn solvency_cone(&self) -> PolyCone {
        PolyCone {
            dim: self.dim(),
            generators: Some(self.exchange_vectors()),
            normals: None,
        }
    }

    /// Dual cone `K* = {y >= 0 : y_j <= pi_ij y_i}` in H-representation.
    pub fn dual_cone_hrep(&self) -> PolyCone {
        PolyCone {
            dim: self.dim(),
            generators: None,
            normals: Some(self.exchange_vectors()),
        }
    }

    /// Round-trip losses on every pair: `pi_ij pi_ji > 1` for all `i != j`.
    pub fn efficient_friction(&self) -> bool {
        self.off_diagonal()
            .all(|(i, j)| &self.entries[i][j] * &self.entries[j][i] > Rat::one())
    }

    /// `c = max_{i != j} pi_ij pi_ji`.
    pub fn roundtrip_bound(&self) -> Rat {
        self.off_diagonal()
            .map(|(i, j)| &self.entries[i][j] * &self.entries[j][i])
            .max()
            .expect("d >= 2")
    }

    /// Pairs `(i, k, j)` where the direct rate exceeds the indirect one,
    /// `pi_ij > pi_ik pi_kj`. Reported as warnings only.
    pub fn triangle_violations(&self) -> Vec<(usize, usize, usize)> {
        let d = self.dim();
        let mut out = Vec::new();
        for (i, j) in self.off_diagonal() {
            for k in 0..d {
                if k == i || k == j {
                    continue;
                }
                if self.entries[i][j] > &self.entries[i][k] * &self.entries[k][j] {
                    out.push((i, k, j));
                }
            }
        }
        out
    }

    /// Splits the rates into a frictionless quote `S` (scaled to `S_1 = 1`) and
    /// proportional costs `lambda_ij = pi_ij S_i / S_j - 1`.
    pub fn frictionless_decompose(&self, quote: &[Rat]) -> Result<FrictionDecomposition, ConeError> {
        let d = self.dim();
        if quote.len() != d {
            return Err(ConeError::DimensionMismatch {
                expected: d,
                got: quote.len(),
            });
        }
        if quote.iter().any(|s| !s.is_positive()) {
            return Err(ConeError::NonPositiveQuote);
        }
        let quote = scale(quote, &quote[0].recip());
        let mut costs = vec![vec![Rat::zero(); d]; d];
        for (i, j) in self.off_diagonal() {
            let lambda = &self.entries[i][j] * &quote[i] / &quote[j] - Rat::one();
            if lambda.is_negative() {
                return Err(ConeError::QuoteNotConsistent { i, j, lambda });
            }
            costs[i][j] = lambda;
        }
        Ok(FrictionDecomposition { quote, costs })
    }
}

/// Frictionless quote plus proportional transaction costs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrictionDecomposition {
    pub quote: Vec<Rat>,
    pub costs: Vec<Vec<Rat>>,
}

impl FrictionDecomposition {
    /// Checks `S_j (1 + lambda_ij) = pi_ij S_i` for all pairs.
    pub fn reproduces(&self, pi: &BidAskMatrix) -> bool {
        pi.off_diagonal().all(|(i, j)| {
            &self.quote[j] * (Rat::one() + &self.costs[i][j]) == pi.rate(i, j) * &self.quote[i]
        })
    }

    pub fn max_gross_cost(&self) -> Rat {
        let d = self.quote.len();
        (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| Rat::one() + &self.costs[i][j])
            .max()
            .unwrap_or_else(|| int(1))
    }
}

/// Both cones attached to one node: `K` with generators and normals, `K*` with
/// its defining inequalities and its extreme rays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeCones {
    pub solvency: PolyCone,
    pub dual: PolyCone,
}

impl NodeCones {
    pub fn new(pi: &BidAskMatrix) -> Result<Self, ConeError> {
        let dual_hrep = pi.dual_cone_hrep();
        let dual_rays = dual_hrep.extreme_rays()?;
        let dual = PolyCone {
            dim: pi.dim(),
            generators: Some(dual_rays.clone()),
            normals: dual_hrep.normals,
        };
        let solvency = PolyCone {
            dim: pi.dim(),
            generators: Some(pi.exchange_vectors()),
            normals: Some(dual_rays),
        };
        Ok(Self { solvency, dual })
    }

    /// Extreme rays of `K*`.
    pub fn dual_rays(&self) -> &[Vec<Rat>] {
        self.dual.generators().expect("node cones carry dual rays")
    }
}
