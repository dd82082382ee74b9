//! Shoot Q for a few exponents, print the sharp-constant report, and compare
//! the Coulomb soliton with Q.
//!
//! cargo run --release --example ground_states

use coulomb_nls::ground_states::{constants_report, explicit_w, w_gradient_sq};
use coulomb_nls::prelude::*;

fn main() -> coulomb_nls::Result<()> {
    let grid = RadialGrid::new(30.0, 2048)?;
    println!("{:>6} {:>10} {:>12} {:>12} {:>12}", "p", "Q(0)", "M(Q)", "E0(Q)", "C0");
    for p in [7.0 / 3.0, 2.5, 3.0, 3.5, 4.0] {
        let q = shoot_ground_state(ShootKind::Q { p }, &grid, SHOOT_TOL)?;
        let r = constants_report(&q, p)?;
        println!("{p:>6.3} {:>10.6} {:>12.6} {:>12.6} {:>12.6}", q.amplitude, r.mass_q, r.e0_q, r.c0);
    }

    let w = explicit_w(&grid);
    println!("W: |W|^2_H1 on the grid {:.6}, exact {:.6}", w.norms.h1.powi(2), w_gradient_sq());

    for k in [3.0, 4.0] {
        let f = shoot_ground_state(ShootKind::F { k, p: 3.0 }, &grid, SHOOT_TOL)?;
        println!("soliton K = {k}: f(0) = {:.6}, |f|_2 = {:.6}", f.amplitude, f.norms.l2);
    }
    match shoot_ground_state(ShootKind::F { k: 2.0, p: 3.0 }, &grid, SHOOT_TOL) {
        Ok(f) => println!("soliton K = 2: f(0) = {}", f.amplitude),
        Err(e) => println!("soliton K = 2: {e}"),
    }
    Ok(())
}
