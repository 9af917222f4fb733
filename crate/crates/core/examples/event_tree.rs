//! Event trees with model families: labels, reachable sets, polar nodes and
//! the support cone of tomorrow's solvency cones.

use cpslab::cone::BidAskMatrix;
use cpslab::rational::{int, rat, show};
use cpslab::tree::{EventTree, Market, ModelFamily};

fn main() {
    // Root with three children; the second child has only one successor.
    let tree = EventTree::from_child_counts(2, &[3, 2, 1, 2, 0, 0, 0, 0, 0]).unwrap();
    // Two extreme kernels at the root; neither charges the last child.
    let mut kernels = vec![Vec::new(); tree.len()];
    kernels[0] = vec![vec![rat(1, 2), rat(1, 2), int(0)], vec![int(1), int(0), int(0)]];
    for id in tree.non_terminal().into_iter().skip(1) {
        let b = tree.children(id).len() as i64;
        kernels[id.0] = vec![vec![rat(1, b); b as usize]];
    }
    let rates = [2, 3, 3, 3, 4, 4, 4, 4, 4];
    let bidask = rates.iter().map(|&r| BidAskMatrix::uniform(2, int(r)).unwrap()).collect();
    let market = Market::new(tree, bidask, ModelFamily::new(kernels)).unwrap();

    let tree = market.tree();
    for id in tree.ids() {
        let reach = if tree.is_terminal(id) { String::from("-") } else { format!("{:?}", market.reachable_set(id).unwrap()) };
        println!(
            "{:<6} t={} polar={:<5} reachable branches {}",
            market.label(id),
            tree.time(id),
            market.is_polar(id),
            reach
        );
    }
    let lambda = market.support_cone(tree.root()).unwrap();
    println!("support cone at the root, extreme rays: {:?}", lambda.extreme_rays().unwrap().iter().map(|r| show(r)).collect::<Vec<_>>());
    println!("validation: {:?}", market.validate(None).violations);
}
