//! Solvency and dual cones of a bid-ask matrix: double description, interior
//! points, efficient friction and the frictionless decomposition.

use cpslab::cone::{BidAskMatrix, NodeCones};
use cpslab::rational::{int, rat, show};

fn main() {
    // Two assets, a unit of either costs two of the other.
    let pi = BidAskMatrix::uniform(2, int(2)).unwrap();
    let cones = NodeCones::new(&pi).unwrap();
    println!("K generators: {:?}", cones.solvency.generators().unwrap().iter().map(|g| show(g)).collect::<Vec<_>>());
    println!("K* extreme rays: {:?}", cones.dual_rays().iter().map(|r| show(r)).collect::<Vec<_>>());
    println!("interior point of K*: {}", show(&cones.dual.pick_interior_point().unwrap()));
    println!("efficient friction: {}, round-trip bound c = {}", pi.efficient_friction(), pi.roundtrip_bound());

    // A round trip at no loss: K* has empty interior and the margin LP says why.
    let flat = BidAskMatrix::pair(rat(1, 2), int(2)).unwrap();
    let margin = NodeCones::new(&flat).unwrap().dual.max_margin().unwrap();
    println!(
        "pi12 * pi21 = 1: efficient friction {}, margin {}, certificate {}",
        flat.efficient_friction(),
        margin.margin,
        show(&margin.certificate)
    );

    // Three assets quoted at S = (1, 2, 4) with 10% costs everywhere.
    let quote = [int(1), int(2), int(4)];
    let entries = (0..3)
        .map(|i| (0..3).map(|j| if i == j { int(1) } else { &quote[j] * rat(11, 10) / &quote[i] }).collect())
        .collect();
    let pi3 = BidAskMatrix::new(entries).unwrap();
    let split = pi3.frictionless_decompose(&quote).unwrap();
    println!(
        "3 assets: {} dual rays, max gross cost {} <= c = {}",
        NodeCones::new(&pi3).unwrap().dual_rays().len(),
        split.max_gross_cost(),
        pi3.roundtrip_bound()
    );
}
