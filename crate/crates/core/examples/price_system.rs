//! Strictly consistent price systems: the one-step split, a two-period build
//! with exact verification, the easy-direction identity, and a start price
//! that cannot be extended because of arbitrage.

use cpslab::cone::BidAskMatrix;
use cpslab::cps::{build_pce, easy_direction_sides, one_step_extend, verify_pce, ExtensionRequest, OneStep, PceError};
use cpslab::rational::{int, rat, show};
use cpslab::tree::{EventTree, Market, ModelFamily, NodeId};

fn market(horizon: usize, rates: &[i64]) -> Market {
    let tree = EventTree::uniform(horizon, 2).unwrap();
    let bidask = (0..tree.len()).map(|i| BidAskMatrix::uniform(2, int(rates[i.min(rates.len() - 1)])).unwrap()).collect();
    let models = ModelFamily::homogeneous(&tree, &[vec![rat(1, 2), rat(1, 2)], vec![rat(1, 4), rat(3, 4)]]);
    Market::new(tree, bidask, models).unwrap()
}

fn main() {
    // Rates grow along the tree, so every interior start price extends.
    let m = market(2, &[2, 3, 4, 5, 6, 7, 8]);
    let y = vec![int(1), rat(3, 2)];
    if let OneStep::Extended(ext) = one_step_extend(&m, NodeId(0), &y, &[0, 1]).unwrap() {
        println!("split of {}: q = {}, z = {:?}", show(&y), show(&ext.kernel), ext.z.iter().map(|z| show(z)).collect::<Vec<_>>());
    }
    let req = ExtensionRequest::constant(&m, 0, m.uniform_measure(), y);
    let ps = build_pce(&m, &req).unwrap();
    for id in m.tree().ids() {
        println!("{:<6} Z = {}", m.label(id), ps.z_at(id).map(|z| show(z)).unwrap_or_default());
    }
    println!("violations: {:?}", verify_pce(&m, &ps, &req));
    let (lhs, rhs) = easy_direction_sides(&m, &ps, NodeId(0), &[int(5), int(-1)]).unwrap();
    println!("E[<Z1, zeta>] = {lhs}, <Z0, zeta> = {rhs}");

    // After an 8 -> 2 drop the start price (1, 6) has no extension.
    let m = market(1, &[8, 2]);
    let req = ExtensionRequest::constant(&m, 0, m.uniform_measure(), vec![int(1), int(6)]);
    match build_pce(&m, &req) {
        Err(PceError::NoExtension { node, obstruction }) => {
            println!("no extension at {node}: position {} is solvent tomorrow but worth <= 0 under (1, 6)", show(&obstruction.zeta));
        }
        other => println!("unexpected: {other:?}"),
    }
}
