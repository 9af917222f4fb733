//! Simplex answers against a brute-force vertex enumeration on small bounded
//! programs, plus duality and Farkas checks by substitution.

use cpslab::lp::{lp_feasible, lp_solve, Direction, LinearProgram, LpOutcome, Sense, VarBound};
use cpslab::rational::{dot, int, rat};
use cpslab::Rat;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

/// Solves a square system by Gauss-Jordan elimination; `None` if singular.
fn solve_square(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        b.swap(col, p);
        let inv = a[col][col].clone().recip();
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        b[col] *= &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..n {
                    let d = &f * &a[col][c];
                    a[r][c] -= d;
                }
                let d = &f * &b[col];
                b[r] -= d;
            }
        }
    }
    Some(b)
}

/// Best objective over all basic feasible points, or `None` if there are none.
/// Only valid for bounded programs with nonnegative variables.
fn vertex_oracle(lp: &LinearProgram) -> Option<Rat> {
    let n = lp.num_vars();
    let mut hyperplanes: Vec<(Vec<Rat>, Rat)> = lp.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs.clone())).collect();
    for j in 0..n {
        let mut e = vec![Rat::zero(); n];
        e[j] = int(1);
        hyperplanes.push((e, Rat::zero()));
    }
    let k = hyperplanes.len();
    let mut best: Option<Rat> = None;
    let mut pick = vec![0usize; n];
    fn rec(
        depth: usize,
        start: usize,
        pick: &mut Vec<usize>,
        hyperplanes: &[(Vec<Rat>, Rat)],
        lp: &LinearProgram,
        best: &mut Option<Rat>,
    ) {
        let n = pick.len();
        if depth == n {
            let a = pick.iter().map(|&i| hyperplanes[i].0.clone()).collect();
            let b = pick.iter().map(|&i| hyperplanes[i].1.clone()).collect();
            if let Some(x) = solve_square(a, b) {
                if lp.is_feasible_point(&x) {
                    let v = lp.objective_value(&x);
                    let better = match (&*best, lp.direction) {
                        (None, _) => true,
                        (Some(b), Direction::Maximize) => v > *b,
                        (Some(b), Direction::Minimize) => v < *b,
                    };
                    if better {
                        *best = Some(v);
                    }
                }
            }
            return;
        }
        for i in start..hyperplanes.len() {
            pick[depth] = i;
            rec(depth + 1, i + 1, pick, hyperplanes, lp, best);
        }
    }
    if k >= n {
        rec(0, 0, &mut pick, &hyperplanes, lp, &mut best);
    }
    best
}

/// Dual feasibility and strong duality, following the documented conventions.
fn dual_checks(lp: &LinearProgram, dual: &[Rat], value: &Rat) -> bool {
    let max = lp.direction == Direction::Maximize;
    let signs = lp.constraints.iter().zip(dual).all(|(c, y)| match (c.sense, max) {
        (Sense::Eq, _) => true,
        (Sense::Le, true) | (Sense::Ge, false) => !y.is_negative(),
        (Sense::Ge, true) | (Sense::Le, false) => !y.is_positive(),
    });
    let columns = (0..lp.num_vars()).all(|j| {
        let col: Rat = lp.constraints.iter().zip(dual).map(|(c, y)| y * &c.coeffs[j]).sum();
        match (lp.bounds[j], max) {
            (VarBound::Free, _) => col == lp.objective[j],
            (VarBound::NonNeg, true) => col >= lp.objective[j],
            (VarBound::NonNeg, false) => col <= lp.objective[j],
        }
    });
    let by: Rat = lp.constraints.iter().zip(dual).map(|(c, y)| y * &c.rhs).sum();
    signs && columns && by == *value
}

fn sense_of(k: u8) -> Sense {
    match k % 3 {
        0 => Sense::Le,
        1 => Sense::Ge,
        _ => Sense::Eq,
    }
}

/// Random program with a box `x_j <= 6` so the oracle applies.
fn random_lp() -> impl Strategy<Value = LinearProgram> {
    (2usize..=3, 1usize..=4, any::<bool>()).prop_flat_map(|(n, m, max)| {
        (
            prop::collection::vec(-3i64..=3, n),
            prop::collection::vec((prop::collection::vec(-3i64..=3, n), 0u8..3, -5i64..=5), m),
        )
            .prop_map(move |(obj, rows)| {
                let dir = if max { Direction::Maximize } else { Direction::Minimize };
                let mut lp = LinearProgram::new(dir, obj.into_iter().map(int).collect());
                for (coeffs, sense, rhs) in rows {
                    lp.add(coeffs.into_iter().map(int).collect(), sense_of(sense), int(rhs));
                }
                for j in 0..n {
                    let mut e = vec![int(0); n];
                    e[j] = int(1);
                    lp.add(e, Sense::Le, int(6));
                }
                lp
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplex_matches_vertex_enumeration(lp in random_lp()) {
        let oracle = vertex_oracle(&lp);
        match lp_solve(&lp).unwrap() {
            LpOutcome::Optimal { point, value, dual } => {
                prop_assert!(lp.is_feasible_point(&point));
                prop_assert_eq!(lp.objective_value(&point), value.clone());
                prop_assert_eq!(Some(value.clone()), oracle);
                prop_assert!(dual_checks(&lp, &dual, &value), "dual {:?}", dual);
            }
            LpOutcome::Infeasible { farkas } => {
                prop_assert!(oracle.is_none());
                prop_assert!(lp.verify_farkas(&farkas));
            }
            LpOutcome::Unbounded { .. } => prop_assert!(false, "boxed program reported unbounded"),
        }
    }

    #[test]
    fn phase_one_agrees_with_full_solve(lp in random_lp()) {
        let full = lp_solve(&lp).unwrap();
        let feas = lp_feasible(&lp).unwrap();
        prop_assert_eq!(feas.is_feasible(), !matches!(full, LpOutcome::Infeasible { .. }));
    }

    #[test]
    fn solver_is_deterministic(lp in random_lp()) {
        prop_assert_eq!(lp_solve(&lp).unwrap(), lp_solve(&lp).unwrap());
    }
}

#[test]
fn textbook_optimum_matches_enumeration() {
    let mut lp = LinearProgram::new(Direction::Maximize, vec![int(1), int(1)]);
    lp.add(vec![int(1), int(2)], Sense::Le, int(4));
    lp.add(vec![int(2), int(1)], Sense::Le, int(4));
    assert_eq!(vertex_oracle(&lp), Some(rat(8, 3)));
    match lp_solve(&lp).unwrap() {
        LpOutcome::Optimal { point, value, dual } => {
            assert_eq!(point, vec![rat(4, 3), rat(4, 3)]);
            assert_eq!(value, rat(8, 3));
            assert_eq!(dual, vec![rat(1, 3), rat(1, 3)]);
            assert!(dual_checks(&lp, &dual, &value));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn free_variable_reaches_its_lower_row() {
    let mut lp = LinearProgram::new(Direction::Maximize, vec![int(-1)]).with_bound(0, VarBound::Free);
    lp.add(vec![int(1)], Sense::Ge, int(-3));
    match lp_solve(&lp).unwrap() {
        LpOutcome::Optimal { point, value, dual } => {
            assert_eq!(point, vec![int(-3)]);
            assert_eq!(value, int(3));
            assert!(dual_checks(&lp, &dual, &value));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unbounded_ray_verifies() {
    let mut lp = LinearProgram::new(Direction::Minimize, vec![int(-1), int(-1)]);
    lp.add(vec![int(1), int(-1)], Sense::Le, int(2));
    match lp_solve(&lp).unwrap() {
        LpOutcome::Unbounded { point, ray } => {
            assert!(lp.is_feasible_point(&point));
            assert!(lp.verify_ray(&ray));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn contradictory_equalities_give_a_farkas_vector() {
    let mut lp = LinearProgram::feasibility(2);
    lp.add(vec![int(1), int(1)], Sense::Eq, int(1));
    lp.add(vec![int(2), int(2)], Sense::Eq, int(3));
    match lp_solve(&lp).unwrap() {
        LpOutcome::Infeasible { farkas } => {
            assert!(lp.verify_farkas(&farkas));
            assert!(dot(&farkas, &[int(1), int(3)]).is_positive());
        }
        other => panic!("unexpected {other:?}"),
    }
}
