//! The Coulomb soliton is a global solution that never scatters: |u| stays
//! put and the space-time L4 norm grows linearly.
//!
//! cargo run --release --example soliton

use coulomb_nls::diagnostics::interaction_l4_cumulative;
use coulomb_nls::prelude::*;

fn main() -> coulomb_nls::Result<()> {
    let params = PhysParams::new(3.0, 1, 3.0)?;
    let grid = RadialGrid::new(30.0, 1024)?;
    let mut cfg = EvolveConfig::new(params, grid, InitialData::Soliton, 1e-3, 4.0);
    cfg.sample_stride = 500;
    cfg.snapshot_stride = Some(1);
    let ts = evolve(&cfg)?;

    let f = ts.initial_field.abs();
    let cum = interaction_l4_cumulative(&ts);
    println!("{:>5} {:>12} {:>12}", "t", "||u|-f|_2", "int |u|^4");
    for ((t, u), acc) in ts.snapshots.iter().zip(&cum) {
        let dev = lp_norm(&u.abs().sub(&f)?, 2.0)?;
        println!("{t:>5.2} {dev:>12.2e} {acc:>12.4}");
    }
    Ok(())
}
