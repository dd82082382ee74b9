//! Repulsive defocusing run: the Morawetz action increases and the
//! space-time L4 norm saturates.
//!
//! cargo run --release --example morawetz

use coulomb_nls::diagnostics::{interaction_l4, morawetz_check};
use coulomb_nls::prelude::*;

fn main() -> coulomb_nls::Result<()> {
    let params = PhysParams::new(-1.0, 1, 3.0)?;
    // The wave must not come back from r_max before t_max.
    let grid = RadialGrid::new(200.0, 2048)?;
    let cfg = EvolveConfig::new(
        params,
        grid,
        InitialData::Gaussian { amplitude: 1.0, width: 1.0 },
        1e-2,
        10.0,
    );
    let ts = evolve(&cfg)?;

    for r in ts.samples.iter().step_by(100) {
        println!("t = {:>5.2}  A = {:>9.5}  rate bound = {:>9.5}  |u|_4^4 = {:.3e}", r.t, r.action, r.rate_lb, r.l4);
    }
    let m = morawetz_check(&ts.samples)?;
    let l4 = interaction_l4(&ts)?;
    println!("smallest dA {:.2e}, smallest rate slack {:.2e}", m.min_increment, m.min_rate_slack);
    println!("int |u|^4 = {:.4}, |u0|_2 sup |u|_H1/2 = {:.4}", l4.total, l4.bound_witness);
    Ok(())
}
