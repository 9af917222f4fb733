//! Dense two-phase simplex over exact rationals.
//!
//! The solver is deliberately plain: a full tableau, Dantzig's rule for the
//! entering variable until pivots stall, then Bland's rule, and ratio-test ties
//! broken by the lowest basic column. Every outcome carries something that can be checked by substitution:
//! an optimal point together with a dual solution, a Farkas certificate, or an
//! improving ray.
//!
//! Sign conventions used throughout:
//!
//! * **Dual solution** (`Optimal::dual`): the textbook dual of the program.
//!   For a maximization, `y_i >= 0` on `<=` rows, `y_i <= 0` on `>=` rows and
//!   `A^T y >= c` (with equality on free variables). For a minimization the
//!   inequalities flip. In both cases `b^T y` equals the optimal value.
//! * **Farkas certificate** (`Infeasible::farkas`): a vector `y` with
//!   `y_i <= 0` on `<=` rows, `y_i >= 0` on `>=` rows, `(y^T A)_j <= 0` for
//!   nonnegative variables, `(y^T A)_j = 0` for free variables, and
//!   `y^T b > 0`. Any feasible `x` would give `y^T A x >= y^T b > 0` and
//!   `y^T A x <= 0` at the same time.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{dot, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarBound {
    Free,
    NonNeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub sense: Sense,
    pub rhs: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub direction: Direction,
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBound>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        point: Vec<Rat>,
        value: Rat,
        dual: Vec<Rat>,
    },
    Infeasible {
        farkas: Vec<Rat>,
    },
    Unbounded {
        point: Vec<Rat>,
        ray: Vec<Rat>,
    },
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rat>),
    Infeasible(Vec<Rat>),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("linear program has no variables")]
    NoVariables,
    #[error("objective has {got} coefficients, expected {expected}")]
    ObjectiveLength { expected: usize, got: usize },
    #[error("bounds list has {got} entries, expected {expected}")]
    BoundsLength { expected: usize, got: usize },
    #[error("constraint {row} has {got} coefficients, expected {expected}")]
    RowLength {
        row: usize,
        expected: usize,
        got: usize,
    },
}

impl LinearProgram {
    /// A program over `objective.len()` nonnegative variables and no rows.
    pub fn new(direction: Direction, objective: Vec<Rat>) -> Self {
        let n = objective.len();
        Self {
            direction,
            objective,
            constraints: Vec::new(),
            bounds: vec![VarBound::NonNeg; n],
        }
    }

    /// A pure feasibility problem over `n` nonnegative variables.
    pub fn feasibility(n: usize) -> Self {
        Self::new(Direction::Minimize, vec![Rat::zero(); n])
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_bound(mut self, var: usize, bound: VarBound) -> Self {
        self.bounds[var] = bound;
        self
    }

    pub fn set_bound(&mut self, var: usize, bound: VarBound) {
        self.bounds[var] = bound;
    }

    pub fn add(&mut self, coeffs: Vec<Rat>, sense: Sense, rhs: Rat) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if n == 0 {
            return Err(LpError::NoVariables);
        }
        if self.bounds.len() != n {
            return Err(LpError::BoundsLength {
                expected: n,
                got: self.bounds.len(),
            });
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::RowLength {
                    row,
                    expected: n,
                    got: c.coeffs.len(),
                });
            }
        }
        Ok(())
    }

    /// Whether `x` satisfies every row and bound exactly.
    pub fn is_feasible_point(&self, x: &[Rat]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        let bounds_ok = self
            .bounds
            .iter()
            .zip(x)
            .all(|(b, v)| *b == VarBound::Free || !v.is_negative());
        bounds_ok
            && self.constraints.iter().all(|c| {
                let lhs = dot(&c.coeffs, x);
                match c.sense {
                    Sense::Le => lhs <= c.rhs,
                    Sense::Eq => lhs == c.rhs,
                    Sense::Ge => lhs >= c.rhs,
                }
            })
    }

    /// Checks a Farkas certificate by substitution (see module docs).
    pub fn verify_farkas(&self, y: &[Rat]) -> bool {
        if y.len() != self.constraints.len() {
            return false;
        }
        let signs_ok = self.constraints.iter().zip(y).all(|(c, yi)| match c.sense {
            Sense::Le => !yi.is_positive(),
            Sense::Ge => !yi.is_negative(),
            Sense::Eq => true,
        });
        if !signs_ok {
            return false;
        }
        for j in 0..self.num_vars() {
            let col: Rat = self
                .constraints
                .iter()
                .zip(y)
                .fold(Rat::zero(), |acc, (c, yi)| acc + yi * &c.coeffs[j]);
            let ok = match self.bounds[j] {
                VarBound::NonNeg => !col.is_positive(),
                VarBound::Free => col.is_zero(),
            };
            if !ok {
                return false;
            }
        }
        let yb = self
            .constraints
            .iter()
            .zip(y)
            .fold(Rat::zero(), |acc, (c, yi)| acc + yi * &c.rhs);
        yb.is_positive()
    }

    /// Checks that `ray` is a recession direction that strictly improves the objective.
    pub fn verify_ray(&self, ray: &[Rat]) -> bool {
        if ray.len() != self.num_vars() {
            return false;
        }
        let bounds_ok = self
            .bounds
            .iter()
            .zip(ray)
            .all(|(b, v)| *b == VarBound::Free || !v.is_negative());
        let rows_ok = self.constraints.iter().all(|c| {
            let lhs = dot(&c.coeffs, ray);
            match c.sense {
                Sense::Le => !lhs.is_positive(),
                Sense::Eq => lhs.is_zero(),
                Sense::Ge => !lhs.is_negative(),
            }
        });
        let gain = dot(&self.objective, ray);
        let improves = match self.direction {
            Direction::Maximize => gain.is_positive(),
            Direction::Minimize => gain.is_negative(),
        };
        bounds_ok && rows_ok && improves
    }

    pub fn objective_value(&self, x: &[Rat]) -> Rat {
        dot(&self.objective, x)
    }
}

/// Solves the program exactly. Deterministic for a fixed input.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let mut tab = Tableau::build(lp);
    if let Some(farkas) = tab.phase_one() {
        return Ok(LpOutcome::Infeasible { farkas });
    }
    Ok(tab.phase_two(lp))
}

/// Phase one only: a feasible point or a Farkas certificate.
pub fn lp_feasible(lp: &LinearProgram) -> Result<Feasibility, LpError> {
    lp.validate()?;
    let mut tab = Tableau::build(lp);
    match tab.phase_one() {
        Some(farkas) => Ok(Feasibility::Infeasible(farkas)),
        None => Ok(Feasibility::Feasible(tab.original_point())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    /// Original variable `j`, with sign +1 or -1 (free variables are split).
    Var(usize, bool),
    Slack,
    Artificial,
}

struct Tableau {
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
    /// Column that formed the identity for each row at the start.
    identity_col: Vec<usize>,
    /// Whether the row was multiplied by -1 during normalization.
    flipped: Vec<bool>,
    costs: Vec<Rat>,
    reduced: Vec<Rat>,
    n_orig: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n_orig = lp.num_vars();
        let m = lp.constraints.len();

        let mut kinds = Vec::new();
        for (j, b) in lp.bounds.iter().enumerate() {
            kinds.push(ColKind::Var(j, true));
            if *b == VarBound::Free {
                kinds.push(ColKind::Var(j, false));
            }
        }
        let n_struct = kinds.len();

        // Normalize every row to a nonnegative right-hand side; homogeneous
        // `>=` rows become `<=` rows so their slack can start in the basis.
        let mut flipped = Vec::with_capacity(m);
        let mut senses = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for c in &lp.constraints {
            let flip = c.rhs.is_negative() || (c.rhs.is_zero() && c.sense == Sense::Ge);
            flipped.push(flip);
            rhs.push(if flip { -c.rhs.clone() } else { c.rhs.clone() });
            senses.push(match (c.sense, flip) {
                (Sense::Le, true) => Sense::Ge,
                (Sense::Ge, true) => Sense::Le,
                (s, _) => s,
            });
        }

        // Column layout: structural | slack/surplus | artificial.
        let mut slack_col = vec![None; m];
        for (i, s) in senses.iter().enumerate() {
            if *s != Sense::Eq {
                slack_col[i] = Some(kinds.len());
                kinds.push(ColKind::Slack);
            }
        }
        let mut art_col = vec![None; m];
        for (i, s) in senses.iter().enumerate() {
            if *s != Sense::Le {
                art_col[i] = Some(kinds.len());
                kinds.push(ColKind::Artificial);
            }
        }
        let n = kinds.len();

        let mut rows = vec![vec![Rat::zero(); n]; m];
        let mut basis = Vec::with_capacity(m);
        let mut identity_col = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let sign = if flipped[i] { -Rat::one() } else { Rat::one() };
            for (col, kind) in kinds[..n_struct].iter().enumerate() {
                if let ColKind::Var(j, positive) = kind {
                    let a = &c.coeffs[*j];
                    if !a.is_zero() {
                        let v = a * &sign;
                        rows[i][col] = if *positive { v } else { -v };
                    }
                }
            }
            if let Some(s) = slack_col[i] {
                rows[i][s] = if senses[i] == Sense::Le {
                    Rat::one()
                } else {
                    -Rat::one()
                };
            }
            let start = match (senses[i], art_col[i]) {
                (Sense::Le, _) => slack_col[i].expect("<= rows carry a slack"),
                (_, Some(a)) => a,
                _ => unreachable!("non-<= rows carry an artificial"),
            };
            if let Some(a) = art_col[i] {
                rows[i][a] = Rat::one();
            }
            basis.push(start);
            identity_col.push(start);
        }

        Tableau {
            rows,
            rhs,
            basis,
            kinds,
            identity_col,
            flipped,
            costs: vec![Rat::zero(); n],
            reduced: vec![Rat::zero(); n],
            n_orig,
        }
    }

    fn set_costs(&mut self, costs: Vec<Rat>) {
        let mut reduced = costs.clone();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (r, a) in reduced.iter_mut().zip(&self.rows[i]) {
                if !a.is_zero() {
                    *r -= cb * a;
                }
            }
        }
        self.costs = costs;
        self.reduced = reduced;
    }

    fn objective(&self) -> Rat {
        self.basis
            .iter()
            .zip(&self.rhs)
            .fold(Rat::zero(), |acc, (&b, v)| acc + &self.costs[b] * v)
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let p = self.rows[r][s].clone();
        if !p.is_one() {
            let inv = p.recip();
            for a in self.rows[r].iter_mut() {
                if !a.is_zero() {
                    *a *= &inv;
                }
            }
            self.rhs[r] *= &inv;
        }
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        let nonzero: Vec<usize> = pivot_row
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(j, _)| j)
            .collect();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][s].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nonzero {
                let delta = &f * &pivot_row[j];
                self.rows[i][j] -= delta;
            }
            if !pivot_rhs.is_zero() {
                self.rhs[i] -= &f * &pivot_rhs;
            }
        }
        let f = self.reduced[s].clone();
        if !f.is_zero() {
            for &j in &nonzero {
                let delta = &f * &pivot_row[j];
                self.reduced[j] -= delta;
            }
        }
        self.basis[r] = s;
    }

    /// Simplex on the current costs: Dantzig's rule, switching to Bland's rule
    /// for good after a run of degenerate pivots so cycling cannot occur.
    /// Returns the entering column that proved unboundedness, if any.
    fn run(&mut self, allow_artificial: bool) -> Option<usize> {
        let mut bland = false;
        let mut degenerate = 0;
        loop {
            let eligible = |j: &usize| {
                (allow_artificial || self.kinds[*j] != ColKind::Artificial) && self.reduced[*j].is_negative()
            };
            let entering = if bland {
                (0..self.kinds.len()).find(eligible)
            } else {
                (0..self.kinds.len())
                    .filter(eligible)
                    .fold(None, |best: Option<usize>, j| match best {
                        Some(b) if self.reduced[b] <= self.reduced[j] => Some(b),
                        _ => Some(j),
                    })
            };
            let s = entering?;
            let mut best: Option<(usize, Rat)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][s];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                Some((r, ratio)) => {
                    if ratio.is_zero() {
                        degenerate += 1;
                        bland |= degenerate > self.rows.len();
                    } else {
                        degenerate = 0;
                    }
                    self.pivot(r, s)
                }
                None => return Some(s),
            }
        }
    }

    /// Dual values for the normalized rows, read from the identity columns.
    fn row_duals(&self) -> Vec<Rat> {
        self.identity_col
            .iter()
            .map(|&c| &self.costs[c] - &self.reduced[c])
            .collect()
    }

    fn unflip(&self, u: Vec<Rat>) -> Vec<Rat> {
        u.into_iter()
            .zip(&self.flipped)
            .map(|(v, &f)| if f { -v } else { v })
            .collect()
    }

    /// Returns a Farkas certificate when the program is infeasible.
    fn phase_one(&mut self) -> Option<Vec<Rat>> {
        let costs: Vec<Rat> = self
            .kinds
            .iter()
            .map(|k| {
                if *k == ColKind::Artificial {
                    Rat::one()
                } else {
                    Rat::zero()
                }
            })
            .collect();
        if costs.iter().all(Zero::is_zero) {
            return None;
        }
        self.set_costs(costs);
        let unbounded = self.run(true);
        debug_assert!(unbounded.is_none(), "phase one is bounded below by zero");
        if self.objective().is_positive() {
            return Some(self.unflip(self.row_duals()));
        }
        self.drive_out_artificials();
        None
    }

    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows.len() {
            if self.kinds[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let col = (0..self.kinds.len())
                .find(|&j| self.kinds[j] != ColKind::Artificial && !self.rows[r][j].is_zero());
            if let Some(s) = col {
                self.pivot(r, s);
            }
            // Otherwise the row is redundant and its artificial stays basic at zero.
        }
    }

    fn phase_two(&mut self, lp: &LinearProgram) -> LpOutcome {
        let maximize = lp.direction == Direction::Maximize;
        // Internally we always minimize.
        let costs: Vec<Rat> = self
            .kinds
            .iter()
            .map(|k| match k {
                ColKind::Var(j, positive) => {
                    let c = &lp.objective[*j];
                    let c = if maximize { -c.clone() } else { c.clone() };
                    if *positive {
                        c
                    } else {
                        -c
                    }
                }
                _ => Rat::zero(),
            })
            .collect();
        self.set_costs(costs);
        match self.run(false) {
            None => {
                let point = self.original_point();
                let value = lp.objective_value(&point);
                let u = self.row_duals();
                let dual = if maximize {
                    u.into_iter().map(|v| -v).collect()
                } else {
                    u
                };
                LpOutcome::Optimal {
                    point,
                    value,
                    dual: self.unflip(dual),
                }
            }
            Some(s) => {
                let mut dir = vec![Rat::zero(); self.kinds.len()];
                dir[s] = Rat::one();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !self.rows[i][s].is_zero() {
                        dir[b] = -self.rows[i][s].clone();
                    }
                }
                LpOutcome::Unbounded {
                    point: self.original_point(),
                    ray: self.to_original(&dir),
                }
            }
        }
    }

    fn to_original(&self, values: &[Rat]) -> Vec<Rat> {
        let mut x = vec![Rat::zero(); self.n_orig];
        for (col, kind) in self.kinds.iter().enumerate() {
            if let ColKind::Var(j, positive) = kind {
                if *positive {
                    x[*j] += &values[col];
                } else {
                    x[*j] -= &values[col];
                }
            }
        }
        x
    }

    fn original_point(&self) -> Vec<Rat> {
        let mut values = vec![Rat::zero(); self.kinds.len()];
        for (i, &b) in self.basis.iter().enumerate() {
            values[b] = self.rhs[i].clone();
        }
        self.to_original(&values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn solve(lp: &LinearProgram) -> LpOutcome {
        lp_solve(lp).unwrap()
    }

    #[test]
    fn single_binding_bound() {
        let mut lp = LinearProgram::new(Direction::Maximize, vec![int(1)]);
        lp.add(vec![int(1)], Sense::Le, int(3));
        match solve(&lp) {
            LpOutcome::Optimal { point, value, dual } => {
                assert_eq!(point, vec![int(3)]);
                assert_eq!(value, int(3));
                assert_eq!(dual, vec![int(1)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn contradictory_bounds_are_certified() {
        let mut lp = LinearProgram::feasibility(1);
        lp.add(vec![int(1)], Sense::Le, int(-1));
        lp.add(vec![int(1)], Sense::Ge, int(0));
        match solve(&lp) {
            LpOutcome::Infeasible { farkas } => assert!(lp.verify_farkas(&farkas)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn free_variable_contradiction() {
        let mut lp = LinearProgram::feasibility(1).with_bound(0, VarBound::Free);
        lp.add(vec![int(1)], Sense::Ge, int(1));
        lp.add(vec![int(1)], Sense::Le, int(0));
        match lp_feasible(&lp).unwrap() {
            Feasibility::Infeasible(y) => assert!(lp.verify_farkas(&y)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_variable_vertex() {
        let mut lp = LinearProgram::new(Direction::Maximize, vec![int(1), int(1)]);
        lp.add(vec![int(1), int(2)], Sense::Le, int(4));
        lp.add(vec![int(2), int(1)], Sense::Le, int(4));
        match solve(&lp) {
            LpOutcome::Optimal { point, value, .. } => {
                assert_eq!(point, vec![rat(4, 3), rat(4, 3)]);
                assert_eq!(value, rat(8, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unbounded_ray_improves() {
        let mut lp = LinearProgram::new(Direction::Maximize, vec![int(1), int(0)]);
        lp.add(vec![int(1), int(-1)], Sense::Le, int(1));
        match solve(&lp) {
            LpOutcome::Unbounded { point, ray } => {
                assert!(lp.is_feasible_point(&point));
                assert!(lp.verify_ray(&ray));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimization_with_free_variable() {
        // min x s.t. x >= -2, x free
        let mut lp = LinearProgram::new(Direction::Minimize, vec![int(1)]).with_bound(0, VarBound::Free);
        lp.add(vec![int(1)], Sense::Ge, int(-2));
        match solve(&lp) {
            LpOutcome::Optimal { point, value, dual } => {
                assert_eq!(point, vec![int(-2)]);
                assert_eq!(value, int(-2));
                assert_eq!(dual, vec![int(1)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(Direction::Maximize, vec![int(1), int(1)]);
        lp.add(vec![int(1), int(1)], Sense::Eq, int(1));
        lp.add(vec![int(2), int(2)], Sense::Eq, int(2));
        match solve(&lp) {
            LpOutcome::Optimal { point, value, .. } => {
                assert!(lp.is_feasible_point(&point));
                assert_eq!(value, int(1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_dimensions() {
        let mut lp = LinearProgram::new(Direction::Maximize, vec![int(1), int(1)]);
        lp.add(vec![int(1)], Sense::Le, int(1));
        assert_eq!(
            lp_solve(&lp),
            Err(LpError::RowLength {
                row: 0,
                expected: 2,
                got: 1
            })
        );
        assert_eq!(
            lp_solve(&LinearProgram::new(Direction::Maximize, vec![])),
            Err(LpError::NoVariables)
        );
    }

    #[test]
    fn feasibility_examples() {
        let lp = {
            let mut lp = LinearProgram::feasibility(1);
            lp.add(vec![int(1)], Sense::Ge, int(0));
            lp
        };
        assert_eq!(lp_feasible(&lp).unwrap(), Feasibility::Feasible(vec![int(0)]));

        let mut lp = LinearProgram::feasibility(1);
        lp.add(vec![int(1)], Sense::Ge, int(1));
        lp.add(vec![int(1)], Sense::Le, int(0));
        assert!(!lp_feasible(&lp).unwrap().is_feasible());

        let mut lp = LinearProgram::feasibility(2);
        lp.add(vec![int(1), int(1)], Sense::Eq, int(1));
        lp.add(vec![int(1), int(0)], Sense::Ge, rat(1, 3));
        lp.add(vec![int(0), int(1)], Sense::Ge, rat(1, 3));
        match lp_feasible(&lp).unwrap() {
            Feasibility::Feasible(x) => assert!(lp.is_feasible_point(&x)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
