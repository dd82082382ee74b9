use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Complex radial wavefunction samples `u(r_j)` on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: RadialGrid,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: RadialGrid, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Field {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Field { grid, values }
    }

    pub fn from_real_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    pub fn from_real(grid: RadialGrid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max_j |u_j|`.
    pub fn sup(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|z| z * s).collect(),
        }
    }

    pub fn conj(&self) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn abs(&self) -> Field {
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .map(|z| Complex64::new(z.norm(), 0.0))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.grid.check_len(other.len())?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
}

/// Sine coefficients `v̂_k` of `v = r u`, so that `v(r_j) = Σ_k v̂_k sin(κ_k r_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: RadialGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: RadialGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        grid.check_len(coeffs.len())?;
        Ok(SpectralField { grid, coeffs })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }
}
