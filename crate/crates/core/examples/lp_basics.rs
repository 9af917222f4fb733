//! Exact simplex: an optimum with its dual, an infeasible system with a
//! Farkas vector, and an unbounded program with an improving ray. Every
//! answer is checked by substitution.

use cpslab::lp::{lp_solve, Direction, LinearProgram, LpOutcome, Sense};
use cpslab::rational::{int, show};

fn main() {
    // max x + y  s.t.  x + 2y <= 4,  2x + y <= 4
    let mut lp = LinearProgram::new(Direction::Maximize, vec![int(1), int(1)]);
    lp.add(vec![int(1), int(2)], Sense::Le, int(4));
    lp.add(vec![int(2), int(1)], Sense::Le, int(4));
    if let LpOutcome::Optimal { point, value, dual } = lp_solve(&lp).unwrap() {
        println!("optimum {value} at {}, duals {}", show(&point), show(&dual));
        assert!(lp.is_feasible_point(&point));
    }

    // x <= -1 and x >= 0 cannot both hold.
    let mut lp = LinearProgram::feasibility(1);
    lp.add(vec![int(1)], Sense::Le, int(-1));
    lp.add(vec![int(1)], Sense::Ge, int(0));
    if let LpOutcome::Infeasible { farkas } = lp_solve(&lp).unwrap() {
        println!("infeasible, Farkas vector {} (verifies: {})", show(&farkas), lp.verify_farkas(&farkas));
    }

    // max x  s.t.  x - y <= 1
    let mut lp = LinearProgram::new(Direction::Maximize, vec![int(1), int(0)]);
    lp.add(vec![int(1), int(-1)], Sense::Le, int(1));
    if let LpOutcome::Unbounded { point, ray } = lp_solve(&lp).unwrap() {
        println!("unbounded from {} along {} (verifies: {})", show(&point), show(&ray), lp.verify_ray(&ray));
    }
}
