//! Linear hydrogen-like bound state: `e^{-Kr/2}` only picks up a phase.
//!
//! cargo run --release --example bound_state

use coulomb_nls::prelude::*;
use num_complex::Complex64;

fn main() -> coulomb_nls::Result<()> {
    let params = PhysParams::new(2.0, 0, 3.0)?;
    let grid = RadialGrid::new(30.0, 2048)?;
    let mut cfg = EvolveConfig::new(params, grid, InitialData::BoundState { amplitude: 1.0 }, 1e-2, 2.0);
    cfg.sample_stride = 20;
    let ts = evolve(&cfg)?;

    let u0 = &ts.initial_field;
    let c = 0.5 * params.k;
    let exact = u0.scale(Complex64::from_polar(1.0, c * c * ts.final_time));
    let err = lp_norm(&ts.final_field.sub(&exact)?, 2.0)? / lp_norm(u0, 2.0)?;
    println!("t = {}  relative L2 error vs e^(i c^2 t) u0: {err:.2e}", ts.final_time);
    println!("{:>6} {:>14} {:>14}", "t", "mass", "energy");
    for r in &ts.samples {
        println!("{:>6.2} {:>14.10} {:>14.10}", r.t, r.mass, r.energy);
    }
    Ok(())
}
