//! A rate drop from 8 to 2 between today and tomorrow: no-arbitrage fails at
//! the root, the certificate and the global strategy verify, and a primal
//! double-description check agrees.

use cpslab::cone::BidAskMatrix;
use cpslab::na2::{arbitrage_to_global, na2_global, na2_local_primal, verify_global_certificate};
use cpslab::rational::{int, rat, show};
use cpslab::tree::{EventTree, Market, ModelFamily};

fn main() {
    let tree = EventTree::uniform(1, 2).unwrap();
    let bidask = [8, 2, 2].iter().map(|&r| BidAskMatrix::uniform(2, int(r)).unwrap()).collect();
    let models = ModelFamily::homogeneous(&tree, &[vec![rat(1, 2), rat(1, 2)]]);
    let market = Market::new(tree, bidask, models).unwrap();

    let verdict = na2_global(&market);
    println!("no-arbitrage holds: {}", verdict.holds);
    for cert in &verdict.failing {
        println!(
            "node {}: zeta = {}, separating ray r = {}, <r, zeta> = {}",
            market.label(cert.node),
            show(&cert.zeta),
            show(&cert.separating_ray),
            cpslab::rational::dot(&cert.separating_ray, &cert.zeta)
        );
        println!("certificate verifies: {}", cert.verify(&market).is_ok());
        let strategy = arbitrage_to_global(&market, cert).unwrap();
        let global = verify_global_certificate(&market, &cert.zeta, &strategy, cert.node).unwrap();
        println!("global strategy xi = -zeta at every child verifies: {global}");
        println!("primal check (Lambda inside K): {}", na2_local_primal(&market, cert.node).unwrap());
    }
}
