//! Focusing cubic Gaussian with negative energy: adaptive stepping until the
//! detector fires, with y(t) checked against its quadratic upper bound.
//!
//! cargo run --release --example blowup [amplitude]

use coulomb_nls::diagnostics::threshold_c;
use coulomb_nls::prelude::*;

fn main() -> coulomb_nls::Result<()> {
    let amplitude: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4.5);
    let params = PhysParams::new(0.0, -1, 3.0)?;
    let grid = RadialGrid::new(15.0, 2048)?;
    let mut cfg = EvolveConfig::new(
        params,
        grid,
        InitialData::Gaussian { amplitude, width: 1.0 },
        1e-3,
        5.0,
    );
    cfg.adaptive = true;
    cfg.sample_stride = 8;
    let ts = evolve(&cfg)?;

    let s0 = ts.samples[0];
    let c = threshold_c(s0.energy, s0.mass, &params)?;
    println!("A = {amplitude}: E = {:.4}, C = {c:.4}", s0.energy);
    println!("{:>9} {:>10} {:>10} {:>10} {:>9}", "t", "y", "bound", "|u|_H1", "dt");
    for r in ts.samples.iter().step_by(4) {
        let bound = 12.0 * c * r.t * r.t + s0.yprime * r.t + s0.y;
        println!("{:>9.5} {:>10.5} {:>10.5} {:>10.3} {:>9.2e}", r.t, r.y, bound, r.h1, r.dt);
    }
    println!("status {} at t = {:.5} after {} steps", ts.status.label(), ts.final_time, ts.steps);
    Ok(())
}
