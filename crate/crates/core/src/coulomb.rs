//! Exact linear flow of `-Δ - K/r` in the sine basis.
//!
//! In the coefficients `v̂_k` of `v = r u` the Coulomb term is the dense
//! symmetric matrix
//!
//! ```text
//! V_kl = -(K/L) [Cin((k+l)π) - Cin(|k-l|π)],   Cin(x) = ∫_0^x (1 - cos t)/t dt,
//! ```
//!
//! a Toeplitz part minus a Hankel part, so `V x` costs two FFTs of length
//! `2n`. `exp(-i dt (κ² + V))` is applied by a Chebyshev expansion with
//! Bessel coefficients, which is accurate to round-off for any `dt`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::RadialGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// `Cin(mπ)` for `m = 0..count`.
pub fn cin_multiples(count: usize) -> Vec<f64> {
    let (x, w) = gauss_legendre(16);
    let mut out = Vec::with_capacity(count);
    let mut acc = 0.0;
    out.push(0.0);
    for j in 0..count.saturating_sub(1) {
        let mid = (j as f64 + 0.5) * PI;
        let piece: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| {
                let t = mid + 0.5 * PI * xi;
                let s = (0.5 * t).sin();
                wi * 2.0 * s * s / t
            })
            .sum();
        acc += 0.5 * PI * piece;
        out.push(acc);
    }
    out.truncate(count);
    out
}

/// The Galerkin matrix of `-K/r` in the sine coefficients of `r u`.
pub struct CoulombMatrix {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    toeplitz_hat: Vec<Complex64>,
    hankel_hat: Vec<Complex64>,
}

impl CoulombMatrix {
    pub fn new(grid: &RadialGrid, k: f64) -> Self {
        let n = grid.len();
        let size = 2 * n;
        let c = cin_multiples(2 * n + 1);
        let scale = -k / grid.r_max();
        let norm = scale / size as f64;

        // Toeplitz -(K/L) C(|i-j|) as a circulant of length 2n.
        let mut t = vec![ZERO; size];
        for m in 0..n {
            t[m] = Complex64::new(-c[m] * norm, 0.0);
            if m > 0 {
                t[size - m] = t[m];
            }
        }
        // Hankel -(K/L) C(i+j+2) as a circular correlation kernel.
        let mut h = vec![ZERO; size];
        for (m, slot) in h.iter_mut().enumerate().take(2 * n - 1) {
            *slot = Complex64::new(c[m + 2] * norm, 0.0);
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        fwd.process(&mut t);
        fwd.process(&mut h);
        CoulombMatrix {
            n,
            fwd,
            inv,
            toeplitz_hat: t,
            hankel_hat: h,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `out = V x`; `scratch` must hold `4n` entries.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let size = 2 * self.n;
        scratch.clear();
        scratch.resize(2 * size, ZERO);
        let (buf, spec) = scratch.split_at_mut(size);
        buf[..self.n].copy_from_slice(x);
        self.fwd.process(buf);
        spec[0] = buf[0] * self.toeplitz_hat[0] + buf[0] * self.hankel_hat[0];
        for k in 1..size {
            spec[k] = buf[k] * self.toeplitz_hat[k] + buf[size - k] * self.hankel_hat[k];
        }
        self.inv.process(spec);
        out.copy_from_slice(&spec[..self.n]);
    }

    /// Dense copy, for tests and small problems.
    pub fn to_dense(grid: &RadialGrid, k: f64) -> Vec<Vec<f64>> {
        let n = grid.len();
        let c = cin_multiples(2 * n + 1);
        let scale = -k / grid.r_max();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| scale * (c[i + j + 2] - c[i.abs_diff(j)]))
                    .collect()
            })
            .collect()
    }
}

/// `∫|u|²/|x| dx` for the sine interpolant of `r u`, from its coefficients.
///
/// Exact for the Galerkin discretization, so the discrete energy built on it
/// is the one the linear propagator conserves.
pub(crate) fn inverse_r_form(coeffs: &[Complex64], grid: &RadialGrid) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<CoulombMatrix>>>> = OnceLock::new();
    let unit = {
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("coulomb cache poisoned");
        map.entry((grid.len(), grid.r_max().to_bits()))
            .or_insert_with(|| Arc::new(CoulombMatrix::new(grid, 1.0)))
            .clone()
    };
    let mut out = vec![ZERO; coeffs.len()];
    let mut scratch = Vec::new();
    unit.apply(coeffs, &mut out, &mut scratch);
    let quad: f64 = coeffs.iter().zip(&out).map(|(c, o)| (c.conj() * o).re).sum();
    -2.0 * PI * grid.r_max() * quad
}

/// `J_0(z), …, J_{kmax}(z)` for `z ≥ 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(z: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = kmax.max(z.ceil() as usize) + 20 + (z.cbrt() * 10.0).ceil() as usize;
    let start = start + (start % 2);
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    for m in (1..=start).rev() {
        let prev = 2.0 * m as f64 / z * cur - next;
        next = cur;
        cur = prev;
        // cur is now J_{m-1}
        let idx = m - 1;
        if idx <= kmax {
            out[idx] = cur;
        }
        if idx % 2 == 0 {
            norm += if idx == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut().skip(idx) {
                *v *= 1e-250;
            }
        }
    }
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// `exp(-i dt (−Δ − K/r))` on sine coefficients of `r u`.
pub struct LinearPropagator {
    kappa2: Vec<f64>,
    kind: PropagatorKind,
}

enum PropagatorKind {
    Diagonal(Vec<Complex64>),
    Chebyshev {
        matrix: CoulombMatrix,
        center: f64,
        half_width: f64,
        coeffs: Vec<Complex64>,
    },
}

impl LinearPropagator {
    pub fn new(grid: &RadialGrid, k: f64, dt: f64) -> Self {
        let kappa2: Vec<f64> = grid.wavenumbers().iter().map(|k| k * k).collect();
        if k == 0.0 || dt == 0.0 {
            let phases = kappa2
                .iter()
                .map(|k2| Complex64::from_polar(1.0, -k2 * dt))
                .collect();
            return LinearPropagator {
                kappa2,
                kind: PropagatorKind::Diagonal(phases),
            };
        }
        let (lo, hi) = spectrum_bounds(grid, k);
        let center = 0.5 * (hi + lo);
        let half_width = 0.5 * (hi - lo);
        let z = half_width * dt.abs();
        let kmax = (z + 10.0 * z.cbrt() + 40.0).ceil() as usize;
        let bessel = bessel_j_sequence(z, kmax);
        let sign = if dt >= 0.0 { 1.0 } else { -1.0 };
        let global = Complex64::from_polar(1.0, -center * dt);
        let mut coeffs = Vec::with_capacity(kmax + 1);
        let mut rot = Complex64::new(1.0, 0.0);
        // exp(-i s z x) = Σ ε_k (-i s)^k J_k(z) T_k(x)
        let step = Complex64::new(0.0, -sign);
        for (idx, jk) in bessel.iter().enumerate() {
            let eps = if idx == 0 { 1.0 } else { 2.0 };
            coeffs.push(global * rot * (eps * jk));
            rot *= step;
        }
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.norm() < 1e-18) {
            coeffs.pop();
        }
        LinearPropagator {
            kappa2,
            kind: PropagatorKind::Chebyshev {
                matrix: CoulombMatrix::new(grid, k),
                center,
                half_width,
                coeffs,
            },
        }
    }

    /// Number of operator applications per step (0 for the diagonal flow).
    pub fn degree(&self) -> usize {
        match &self.kind {
            PropagatorKind::Diagonal(_) => 0,
            PropagatorKind::Chebyshev { coeffs, .. } => coeffs.len() - 1,
        }
    }

    pub fn apply(&self, x: &mut [Complex64]) {
        match &self.kind {
            PropagatorKind::Diagonal(phases) => {
                for (v, ph) in x.iter_mut().zip(phases) {
                    *v *= ph;
                }
            }
            PropagatorKind::Chebyshev {
                matrix,
                center,
                half_width,
                coeffs,
            } => {
                let n = x.len();
                let mut scratch = Vec::with_capacity(4 * n);
                let mut tmp = vec![ZERO; n];
                let mut prev: Vec<Complex64> = x.to_vec();
                let mut acc: Vec<Complex64> = prev.iter().map(|v| v * coeffs[0]).collect();
                if coeffs.len() == 1 {
                    x.copy_from_slice(&acc);
                    return;
                }
                let inv_w = 1.0 / half_width;
                // T_1 x
                let mut cur = vec![ZERO; n];
                matrix.apply(&prev, &mut tmp, &mut scratch);
                for i in 0..n {
                    cur[i] = ((self.kappa2[i] - center) * prev[i] + tmp[i]) * inv_w;
                    acc[i] += cur[i] * coeffs[1];
                }
                for c in &coeffs[2..] {
                    matrix.apply(&cur, &mut tmp, &mut scratch);
                    for i in 0..n {
                        let next = 2.0 * ((self.kappa2[i] - center) * cur[i] + tmp[i]) * inv_w
                            - prev[i];
                        prev[i] = cur[i];
                        cur[i] = next;
                        acc[i] += next * c;
                    }
                }
                x.copy_from_slice(&acc);
            }
        }
    }
}

/// Bounds on the spectrum of `κ² + V` with a small safety margin.
pub(crate) fn spectrum_bounds(grid: &RadialGrid, k: f64) -> (f64, f64) {
    let kn = grid.len() as f64 * PI / grid.r_max();
    let lo = if k > 0.0 { -0.25 * k * k } else { 0.0 };
    let hi = if k < 0.0 {
        kn * kn + 2.0 * k.abs() * kn
    } else {
        kn * kn
    };
    let pad = 0.01 * (hi - lo) + 1e-3;
    (lo - pad, hi + pad)
}
