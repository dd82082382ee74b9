use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equation parameters for `i u_t = -Δu - (K/|x|) u + λ |u|^{p-1} u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Coulomb coupling; `K > 0` attractive, `K < 0` repulsive.
    pub k: f64,
    /// `+1` defocusing, `-1` focusing, `0` linear runs only.
    pub lambda: i8,
    /// Nonlinearity exponent in `(1, 5]`.
    pub p: f64,
}

/// Tolerance used to decide whether `p` sits on one of the critical values.
pub const CRITICAL_P_TOL: f64 = 1e-12;

/// Mass-critical exponent `7/3`.
pub const P_MASS_CRITICAL: f64 = 7.0 / 3.0;

/// Energy-critical exponent `5`.
pub const P_ENERGY_CRITICAL: f64 = 5.0;

impl PhysParams {
    pub fn new(k: f64, lambda: i8, p: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::param("K", "must be finite"));
        }
        if !matches!(lambda, -1..=1) {
            return Err(Error::param("lambda", format!("{lambda} not in {{-1, 0, 1}}")));
        }
        if !(p.is_finite() && p > 1.0 && p <= 5.0) {
            return Err(Error::param("p", format!("{p} not in (1, 5]")));
        }
        Ok(PhysParams { k, lambda, p })
    }

    /// Scaling-critical Sobolev index `3/2 - 2/(p-1)`.
    pub fn s_c(&self) -> f64 {
        1.5 - 2.0 / (self.p - 1.0)
    }

    pub fn lambda_f64(&self) -> f64 {
        f64::from(self.lambda)
    }

    pub fn is_mass_critical(&self) -> bool {
        (self.p - P_MASS_CRITICAL).abs() < CRITICAL_P_TOL
    }

    pub fn is_energy_critical(&self) -> bool {
        (self.p - P_ENERGY_CRITICAL).abs() < CRITICAL_P_TOL
    }

    pub fn with_k(self, k: f64) -> Self {
        PhysParams { k, ..self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_index() {
        assert!(PhysParams::new(0.0, -1, 7.0 / 3.0).unwrap().s_c().abs() < 1e-14);
        assert_eq!(PhysParams::new(0.0, -1, 3.0).unwrap().s_c(), 0.5);
        assert_eq!(PhysParams::new(0.0, -1, 5.0).unwrap().s_c(), 1.0);
    }

    #[test]
    fn validation() {
        assert!(PhysParams::new(1.0, 2, 3.0).is_err());
        assert!(PhysParams::new(1.0, 1, 1.0).is_err());
        assert!(PhysParams::new(1.0, 1, 5.5).is_err());
        assert!(PhysParams::new(f64::INFINITY, 1, 3.0).is_err());
        assert!(PhysParams::new(-1.0, 0, 3.0).is_ok());
    }
}
