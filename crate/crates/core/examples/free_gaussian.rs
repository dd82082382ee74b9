//! Free evolution of a Gaussian against its closed form.
//!
//! cargo run --release --example free_gaussian

use coulomb_nls::evolution::free_gaussian;
use coulomb_nls::prelude::*;

fn main() -> coulomb_nls::Result<()> {
    let params = PhysParams::new(0.0, 0, 3.0)?;
    let grid = RadialGrid::new(40.0, 1024)?;
    let mut u = free_gaussian(&grid, 0.0);
    let stepper = Stepper::new(params, grid, 0.05)?;
    for i in 1..=20 {
        u = stepper.step(&u)?;
        let t = 0.05 * i as f64;
        if i % 4 == 0 {
            let err = lp_norm(&u.sub(&free_gaussian(&grid, t))?, 2.0)?;
            println!("t = {t:.2}  L2 error {err:.2e}");
        }
    }
    Ok(())
}
