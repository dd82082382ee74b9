//! Classification of initial data across regimes.
//!
//! cargo run --release --example classify

use coulomb_nls::prelude::*;

fn main() -> coulomb_nls::Result<()> {
    let grid = RadialGrid::new(30.0, 1024)?;
    let cases = [
        ("defocusing", PhysParams::new(-1.0, 1, 3.0)?, 1.0),
        ("small focusing, K < 0", PhysParams::new(-1.0, -1, 3.0)?, 0.5),
        ("large focusing, K = 0", PhysParams::new(0.0, -1, 3.0)?, 4.5),
        ("large focusing, K = 2", PhysParams::new(2.0, -1, 3.0)?, 4.0),
        ("mass subcritical", PhysParams::new(1.0, -1, 2.0)?, 1.0),
    ];
    for (label, params, a) in cases {
        let u0 = InitialData::Gaussian { amplitude: a, width: 1.0 }.build(&grid, &params)?;
        let q = if params.lambda == -1 && params.k < 0.0 {
            Some(shoot_ground_state(ShootKind::Q { p: params.p }, &grid, SHOOT_TOL)?)
        } else {
            None
        };
        let refs = References { q, w: None };
        let c = classify_initial_data(&u0, &params, &refs)?;
        println!("{label:<24} A = {a:<4} -> {}", c.regime);
    }
    Ok(())
}
