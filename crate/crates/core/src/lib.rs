//! Radial spectral simulator for the 3D nonlinear Schrödinger equation with
//! a Coulomb potential,
//!
//! ```text
//! i ∂_t u = -Δu - (K/|x|) u + λ |u|^{p-1} u,
//! ```
//!
//! restricted to radial data on a ball with a Dirichlet wall. The crate
//! computes ground states (`Q`, `W`, the Coulomb soliton `f`), evolves data by
//! Strang splitting with an exact Coulomb propagator, and monitors mass,
//! energy, virial and Morawetz functionals.
//!
//! ```
//! use coulomb_nls::prelude::*;
//!
//! let params = PhysParams::new(2.0, 0, 3.0).unwrap();
//! let grid = RadialGrid::new(30.0, 512).unwrap();
//! let cfg = EvolveConfig::new(params, grid, InitialData::BoundState { amplitude: 1.0 }, 1e-2, 0.1);
//! let series = evolve(&cfg).unwrap();
//! assert_eq!(series.status, Status::Completed);
//! assert!(series.mass_drift() < 1e-10);
//! ```

pub mod config;
pub mod coulomb;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod field;
pub mod grid;
pub mod ground_states;
pub mod params;
pub mod runner;
pub mod selftest;
pub mod spectral;

pub use error::{Error, Result};

/// The commonly used types and entry points.
pub mod prelude {
    pub use crate::config::{parse_config, SimConfig};
    pub use crate::diagnostics::{
        classify_initial_data, diagnostics_record, energy_report, interaction_l4,
        morawetz_report, threshold_c, virial_report, Classification, DiagnosticsRecord,
        References, Regime,
    };
    pub use crate::error::{Error, Result};
    pub use crate::evolution::{
        cn_reference_step, evolve, evolve_from, strang_step, EvolveConfig, InitialData, Status, Stepper,
        TimeSeries,
    };
    pub use crate::field::Field;
    pub use crate::grid::RadialGrid;
    pub use crate::ground_states::{
        constants_report, explicit_w, imaginary_time_ground, shoot_ground_state, GroundState,
        ShootKind, SHOOT_TOL,
    };
    pub use crate::params::PhysParams;
    pub use crate::runner::{run_scenario, run_scenario_with, scenario, RunOptions};
    pub use crate::spectral::{hdot_norm, lp_norm, weighted_integral, Weight};
}
