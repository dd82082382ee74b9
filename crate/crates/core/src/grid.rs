use crate::error::{Error, Result};

/// Smallest node count accepted by [`RadialGrid::new`].
pub const MIN_NODES: usize = 8;

/// Uniform radial nodes `r_j = j h`, `j = 1..=n`, on `(0, r_max)` with
/// `h = r_max / (n + 1)`.
///
/// Both ends are excluded: `r = 0` is the origin of the reduced variable
/// `v = r u` and `r = r_max` is the Dirichlet wall, so `v` vanishes at both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::Sizing(format!("r_max must be positive, got {r_max}")));
        }
        if n < MIN_NODES {
            return Err(Error::Sizing(format!(
                "node count must be at least {MIN_NODES}, got {n}"
            )));
        }
        Ok(RadialGrid { r_max, n })
    }

    /// Same as [`RadialGrid::new`] but without the minimum-size check; used for
    /// tiny hand-computed examples.
    pub fn new_unchecked(r_max: f64, n: usize) -> Self {
        RadialGrid { r_max, n }
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / (self.n + 1) as f64
    }

    /// Node `j` for `j` in `1..=n`.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..=self.n).map(|j| j as f64 * h).collect()
    }

    /// Sine-mode wavenumbers `k π / r_max`, `k = 1..=n`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let base = std::f64::consts::PI / self.r_max;
        (1..=self.n).map(|k| k as f64 * base).collect()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                actual: len,
            });
        }
        Ok(())
    }
}

/// Builds the uniform radial grid; see [`RadialGrid`].
pub fn make_grid(r_max: f64, n: usize) -> Result<RadialGrid> {
    RadialGrid::new(r_max, n)
}
