//! Radial spectral machinery.
//!
//! A radial function `u` on the ball of radius `r_max` is carried as
//! `v = r u`, which vanishes at both ends and is expanded in the sine modes
//! `sin(κ_k r)`, `κ_k = kπ/r_max`. In these variables the 3D radial Laplacian
//! is `Δu = (1/r) ∂_rr v`, i.e. the multiplier `-κ_k²` on the coefficients.
//!
//! Integrals over ℝ³ use the node rule `4π h Σ_j g(r_j)`; see
//! [`weighted_integral`] for the origin terms added for singular weights.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustdct::{Dct1, DctPlanner, Dst1};

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField};
use crate::grid::RadialGrid;

const FOUR_PI: f64 = 4.0 * PI;

/// Cached DST-I / DCT-I plans for one node count.
pub(crate) struct SinePlans {
    n: usize,
    dst: Arc<dyn Dst1<f64>>,
    dct: Arc<dyn Dct1<f64>>,
}

pub(crate) fn sine_plans(n: usize) -> Arc<SinePlans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SinePlans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("plan cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = DctPlanner::new();
            Arc::new(SinePlans {
                n,
                dst: planner.plan_dst1(n),
                dct: planner.plan_dct1(n + 2),
            })
        })
        .clone()
}

impl SinePlans {
    /// Nodal `v_j` → coefficients `v̂_k`.
    pub(crate) fn forward(&self, v: &[Complex64], out: &mut [Complex64]) {
        let scale = 2.0 / (self.n + 1) as f64;
        self.dst_complex(v, out, scale);
    }

    /// Coefficients `v̂_k` → nodal `v_j`.
    pub(crate) fn inverse(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        self.dst_complex(coeffs, out, 1.0);
    }

    fn dst_complex(&self, input: &[Complex64], out: &mut [Complex64], scale: f64) {
        let mut re: Vec<f64> = input.iter().map(|z| z.re).collect();
        let mut im: Vec<f64> = input.iter().map(|z| z.im).collect();
        self.dst.process_dst1(&mut re);
        self.dst.process_dst1(&mut im);
        for (o, (a, b)) in out.iter_mut().zip(re.into_iter().zip(im)) {
            *o = Complex64::new(a * scale, b * scale);
        }
    }

    /// `X_j = Σ_{k=1}^{n} c_k cos(π j k / (n+1))` for `j = 0..=n+1`.
    pub(crate) fn cosine_sum(&self, c: &[Complex64]) -> Vec<Complex64> {
        let mut re = vec![0.0; self.n + 2];
        let mut im = vec![0.0; self.n + 2];
        for (k, z) in c.iter().enumerate() {
            re[k + 1] = z.re;
            im[k + 1] = z.im;
        }
        self.dct.process_dct1(&mut re);
        self.dct.process_dct1(&mut im);
        re.into_iter()
            .zip(im)
            .map(|(a, b)| Complex64::new(a, b))
            .collect()
    }
}

/// Forward transform of `v = r u`.
pub fn to_spectral(field: &Field) -> SpectralField {
    let grid = *field.grid();
    let h = grid.spacing();
    let v: Vec<Complex64> = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, u)| u * ((i + 1) as f64 * h))
        .collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    sine_plans(grid.len()).forward(&v, &mut coeffs);
    SpectralField::new(grid, coeffs).expect("length preserved")
}

/// Inverse transform back to `u = v / r`.
pub fn from_spectral(spec: &SpectralField) -> Field {
    let grid = *spec.grid();
    let mut v = vec![Complex64::new(0.0, 0.0); grid.len()];
    sine_plans(grid.len()).inverse(spec.coeffs(), &mut v);
    let h = grid.spacing();
    for (i, z) in v.iter_mut().enumerate() {
        *z /= (i + 1) as f64 * h;
    }
    Field::new(grid, v).expect("finite input gives finite output")
}

/// Transform direction for [`transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Either representation of a radial function.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Nodal(Field),
    Spectral(SpectralField),
}

/// Direction-tagged transform; `Forward` expects a nodal field and `Inverse`
/// a spectral one.
pub fn transform(input: Representation, direction: Direction) -> Result<Representation> {
    match (input, direction) {
        (Representation::Nodal(f), Direction::Forward) => {
            Ok(Representation::Spectral(to_spectral(&f)))
        }
        (Representation::Spectral(s), Direction::Inverse) => {
            Ok(Representation::Nodal(from_spectral(&s)))
        }
        (Representation::Nodal(_), Direction::Inverse) => Err(Error::param(
            "direction",
            "inverse transform needs spectral coefficients",
        )),
        (Representation::Spectral(_), Direction::Forward) => Err(Error::param(
            "direction",
            "forward transform needs nodal values",
        )),
    }
}

/// `Δu` via the multiplier `-κ_k²` on the sine coefficients of `r u`.
pub fn apply_laplacian(field: &Field) -> Field {
    let spec = to_spectral(field);
    let kappa = field.grid().wavenumbers();
    let coeffs = spec
        .coeffs()
        .iter()
        .zip(&kappa)
        .map(|(c, k)| -c * (k * k))
        .collect();
    from_spectral(&SpectralField::new(*field.grid(), coeffs).expect("length preserved"))
}

/// `‖u‖_{L^q(ℝ³)}` by the node rule.
pub fn lp_norm(field: &Field, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::param("q", format!("exponent {q} < 1")));
    }
    let h = field.grid().spacing();
    let sum: f64 = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let r = (i + 1) as f64 * h;
            r * r * u.norm().powf(q)
        })
        .sum();
    Ok((FOUR_PI * h * sum).powf(1.0 / q))
}

/// `‖u‖_{L^q}^q`, avoiding the round trip through the `1/q` power.
pub(crate) fn lp_integral(field: &Field, q: f64) -> f64 {
    let h = field.grid().spacing();
    let sum: f64 = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let r = (i + 1) as f64 * h;
            let a = u.norm_sqr();
            let aq = if q == 2.0 {
                a
            } else if q == 4.0 {
                a * a
            } else {
                a.powf(0.5 * q)
            };
            r * r * aq
        })
        .sum();
    FOUR_PI * h * sum
}

/// Squared homogeneous Sobolev norm `‖u‖²_{Ḣ^s}`, `s ∈ [0, 1]`, as
/// `4π (r_max/2) Σ_k κ_k^{2s} |v̂_k|²`.
///
/// `s = 0` reproduces `lp_norm(u, 2)²` exactly (discrete Parseval) and `s = 1`
/// is `4π ∫ |∂_r (r u)|² dr`. Intermediate `s` use the interval multiplier,
/// which is only a proxy for the ℝ³ norm.
pub fn hdot_norm_sq(field: &Field, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::param("s", format!("order {s} outside [0, 1]")));
    }
    Ok(hdot_from_coeffs(to_spectral(field).coeffs(), field.grid(), s))
}

/// `‖u‖_{Ḣ^s}`.
pub fn hdot_norm(field: &Field, s: f64) -> Result<f64> {
    hdot_norm_sq(field, s).map(f64::sqrt)
}

pub(crate) fn hdot_from_coeffs(coeffs: &[Complex64], grid: &RadialGrid, s: f64) -> f64 {
    let base = PI / grid.r_max();
    let sum: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let kappa = (i + 1) as f64 * base;
            let w = if s == 0.0 {
                1.0
            } else if s == 1.0 {
                kappa * kappa
            } else {
                kappa.powf(2.0 * s)
            };
            w * c.norm_sqr()
        })
        .sum();
    FOUR_PI * 0.5 * grid.r_max() * sum
}

/// Radial weights for [`weighted_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    RSquared,
    R,
    One,
    InvR,
    InvRSquared,
    /// Indicator of the ball `|x| ≤ R`.
    Ball(f64),
}

impl Weight {
    fn at(self, r: f64) -> f64 {
        match self {
            Weight::RSquared => r * r,
            Weight::R => r,
            Weight::One => 1.0,
            Weight::InvR => 1.0 / r,
            Weight::InvRSquared => 1.0 / (r * r),
            Weight::Ball(big_r) => {
                if r <= big_r {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// `u(0)` by quadratic extrapolation through the first three nodes.
///
/// Exact for `a + b r + c r²`, so it covers both regular profiles and the
/// Coulomb cusp `u ≈ u(0)(1 - K r / 2)`.
pub fn origin_value(field: &Field) -> Complex64 {
    let u = field.values();
    u[0] * 3.0 - u[1] * 3.0 + u[2]
}

/// `∫_{ℝ³} w(|x|) |u|² dx` by the node rule `4π h Σ w(r_j) r_j² |u_j|²`.
///
/// The node rule misses the origin contribution for the singular weights:
/// `1/r` gets the Euler–Maclaurin slope term `(h²/12)|u(0)|²` and `1/r²` the
/// half end-point term `(h/2)|u(0)|²` (both times `4π`).
pub fn weighted_integral(field: &Field, weight: Weight) -> Result<f64> {
    let grid = field.grid();
    if let Weight::Ball(big_r) = weight {
        if !(big_r >= 0.0) || big_r > grid.r_max() {
            return Err(Error::param(
                "R",
                format!("ball radius {big_r} outside [0, {}]", grid.r_max()),
            ));
        }
    }
    let h = grid.spacing();
    let sum: f64 = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let r = (i + 1) as f64 * h;
            weight.at(r) * r * r * u.norm_sqr()
        })
        .sum();
    let origin = match weight {
        Weight::InvR => h * h / 12.0 * origin_value(field).norm_sqr(),
        Weight::InvRSquared => 0.5 * h * origin_value(field).norm_sqr(),
        _ => 0.0,
    };
    Ok(FOUR_PI * (h * sum + origin))
}

/// `∂_r u = (∂_r v - u) / r` with `∂_r v` summed from the sine coefficients.
pub fn radial_derivative(field: &Field) -> Field {
    let spec = to_spectral(field);
    radial_derivative_from(field, &spec).0
}

/// Radial derivative plus the spectral origin value `v'(0) = u(0)`.
pub(crate) fn radial_derivative_from(field: &Field, spec: &SpectralField) -> (Field, Complex64) {
    let grid = *field.grid();
    let kappa = grid.wavenumbers();
    let weighted: Vec<Complex64> = spec
        .coeffs()
        .iter()
        .zip(&kappa)
        .map(|(c, k)| c * *k)
        .collect();
    let dv = sine_plans(grid.len()).cosine_sum(&weighted);
    let h = grid.spacing();
    let values = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let r = (i + 1) as f64 * h;
            (dv[i + 1] - u) / r
        })
        .collect();
    (
        Field::new(grid, values).expect("finite"),
        dv[0],
    )
}

/// `4π h Σ_j r_j^m g_j` for a real nodal density `g`.
pub(crate) fn radial_moment(grid: &RadialGrid, density: impl Fn(usize) -> f64, m: i32) -> f64 {
    let h = grid.spacing();
    let sum: f64 = (0..grid.len())
        .map(|i| ((i + 1) as f64 * h).powi(m) * density(i))
        .sum();
    FOUR_PI * h * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn gaussian(grid: RadialGrid) -> Field {
        Field::from_real_fn(grid, |r| (-r * r).exp())
    }

    #[test]
    fn dst_matches_direct_sum() {
        let grid = RadialGrid::new(3.0, 11).unwrap();
        let f = Field::from_fn(grid, |r| Complex64::new((r * 1.3).cos(), r.sin() * 0.2));
        let spec = to_spectral(&f);
        let n = grid.len();
        for k in 1..=n {
            let direct: Complex64 = (1..=n)
                .map(|j| {
                    f.values()[j - 1]
                        * grid.node(j)
                        * (PI * (j * k) as f64 / (n + 1) as f64).sin()
                })
                .sum::<Complex64>()
                * (2.0 / (n + 1) as f64);
            assert!((direct - spec.coeffs()[k - 1]).norm() < 1e-12);
        }
    }

    #[test]
    fn cosine_sum_matches_direct_sum() {
        let plans = sine_plans(9);
        let coeffs: Vec<Complex64> = (0..9)
            .map(|k| Complex64::new(1.0 / (k + 1) as f64, 0.3 * k as f64))
            .collect();
        let out = plans.cosine_sum(&coeffs);
        for j in 0..=10 {
            let direct: Complex64 = (1..=9)
                .map(|k| coeffs[k - 1] * (PI * (j * k) as f64 / 10.0).cos())
                .sum();
            assert!((direct - out[j]).norm() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn single_sine_mode() {
        let grid = RadialGrid::new(10.0, 64).unwrap();
        let k1 = PI / 10.0;
        let u = Field::from_real_fn(grid, |r| (k1 * r).sin() / r);
        let spec = to_spectral(&u);
        assert!((spec.coeffs()[0] - c(1.0)).norm() < 1e-13);
        assert!(spec.coeffs()[1..].iter().all(|z| z.norm() < 1e-13));

        let lap = apply_laplacian(&u);
        for (a, b) in lap.values().iter().zip(u.values()) {
            assert!((a + b * (k1 * k1)).norm() < 1e-12);
        }
        let h1 = hdot_norm_sq(&u, 1.0).unwrap();
        let expect = FOUR_PI * k1 * k1 * 5.0;
        assert!((h1 - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn zero_field() {
        let grid = RadialGrid::new(5.0, 32).unwrap();
        let z = Field::zeros(grid);
        assert!(to_spectral(&z).coeffs().iter().all(|c| c.norm() == 0.0));
        assert!(apply_laplacian(&z).values().iter().all(|c| c.norm() == 0.0));
        assert_eq!(lp_norm(&z, 2.0).unwrap(), 0.0);
        assert_eq!(lp_norm(&z, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn laplacian_of_gaussian_matches_finite_differences() {
        let worst = |n: usize| {
            let grid = RadialGrid::new(10.0, n).unwrap();
            let h = grid.spacing();
            let lap = apply_laplacian(&gaussian(grid));
            let v = |r: f64| r * (-r * r).exp();
            let mut worst: f64 = 0.0;
            for j in 2..grid.len() - 1 {
                let r = grid.node(j);
                let fd = (v(r + h) - 2.0 * v(r) + v(r - h)) / (h * h) / r;
                worst = worst.max((lap.values()[j - 1].re - fd).abs());
            }
            worst / (h * h)
        };
        // the gap is the centered-difference error (h²/12) v⁗/r
        let coarse = worst(511);
        let fine = worst(1023);
        assert!(fine < 6.0, "{fine}");
        assert!((coarse / fine - 1.0).abs() < 0.05, "{coarse} {fine}");
    }

    #[test]
    fn gaussian_norms() {
        let grid = RadialGrid::new(10.0, 1024).unwrap();
        let u = gaussian(grid);
        let m = lp_norm(&u, 2.0).unwrap().powi(2);
        assert!((m - (PI / 2.0).powf(1.5)).abs() < 1e-6);
        let h1 = hdot_norm_sq(&u, 1.0).unwrap();
        assert!((h1 - 3.0 * (PI / 2.0).powf(1.5)).abs() < 1e-5);
        let h0 = hdot_norm_sq(&u, 0.0).unwrap();
        assert!((h0 - m).abs() < 1e-10 * m);
    }

    #[test]
    fn ball_volume_first_order() {
        // u ≡ 1 does not vanish at the wall, so the node rule is only O(h) here.
        for n in [256usize, 512, 1024] {
            let grid = RadialGrid::new(2.0, n).unwrap();
            let u = Field::from_real_fn(grid, |_| 1.0);
            let exact = FOUR_PI * 8.0 / 3.0;
            let err = (lp_norm(&u, 2.0).unwrap().powi(2) - exact).abs();
            let ball = weighted_integral(&u, Weight::Ball(2.0)).unwrap();
            assert!((ball - lp_norm(&u, 2.0).unwrap().powi(2)).abs() < 1e-12 * exact);
            let h = grid.spacing();
            assert!(err <= FOUR_PI * 4.0 * h, "n={n} err={err}");
        }
    }

    #[test]
    fn gaussian_weighted_integrals() {
        let grid = RadialGrid::new(10.0, 1024).unwrap();
        let u = gaussian(grid);
        let inv_r = weighted_integral(&u, Weight::InvR).unwrap();
        assert!((inv_r - PI).abs() < 1e-6, "{inv_r}");
        let r2 = weighted_integral(&u, Weight::RSquared).unwrap();
        let expect = FOUR_PI * 3.0 / 8.0 * PI.sqrt() * 2f64.powf(-2.5);
        assert!((r2 - expect).abs() < 1e-6);
        // 4π ∫ e^{-2r²} dr = 4π · √(π/8)
        let inv_r2 = weighted_integral(&u, Weight::InvRSquared).unwrap();
        assert!((inv_r2 - FOUR_PI * (PI / 8.0).sqrt()).abs() < 1e-6, "{inv_r2}");
        // 4π ∫ r³ e^{-2r²} dr = 4π / 8
        let r1 = weighted_integral(&u, Weight::R).unwrap();
        assert!((r1 - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn ball_outside_domain_rejected() {
        let grid = RadialGrid::new(10.0, 64).unwrap();
        let u = gaussian(grid);
        assert!(weighted_integral(&u, Weight::Ball(10.5)).is_err());
        assert!(weighted_integral(&u, Weight::Ball(10.0)).is_ok());
    }

    #[test]
    fn bad_exponents_rejected() {
        let grid = RadialGrid::new(10.0, 64).unwrap();
        let u = gaussian(grid);
        assert!(lp_norm(&u, 0.5).is_err());
        assert!(hdot_norm_sq(&u, 1.5).is_err());
        assert!(hdot_norm_sq(&u, -0.1).is_err());
    }

    #[test]
    fn derivative_of_gaussian() {
        let grid = RadialGrid::new(10.0, 1024).unwrap();
        let u = gaussian(grid);
        let du = radial_derivative(&u);
        for (j, d) in du.values().iter().enumerate() {
            let r = grid.node(j + 1);
            if r < 8.0 {
                assert!((d.re + 2.0 * r * (-r * r).exp()).abs() < 1e-6, "r={r}");
            }
            // real data: Im(ū ∂_r u) vanishes identically
            assert!((u.values()[j].conj() * d).im.abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_commutes_with_phase() {
        let grid = RadialGrid::new(8.0, 256).unwrap();
        let u = Field::from_fn(grid, |r| Complex64::new((-r * r).exp(), 0.3 * (-r).exp() * r));
        let phase = Complex64::from_polar(1.0, 0.7);
        let a = radial_derivative(&u.scale(phase));
        let b = radial_derivative(&u).scale(phase);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn origin_value_of_cusp_and_gaussian() {
        let grid = RadialGrid::new(30.0, 4096).unwrap();
        let g = origin_value(&gaussian(grid));
        assert!((g.re - 1.0).abs() < 1e-6);
        let cusp = origin_value(&Field::from_real_fn(grid, |r| (-r).exp()));
        assert!((cusp.re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quadrature_is_second_order() {
        // e^{-r²} has v = r u odd and smooth, so the r² rule converges fast; a cusp
        // profile e^{-r} exposes the O(h²) behaviour of the node rule instead.
        let exact = PI; // ∫ e^{-2r} dx = π
        let err = |n: usize| {
            let grid = RadialGrid::new(20.0, n).unwrap();
            let u = Field::from_real_fn(grid, |r| (-r).exp());
            (lp_norm(&u, 2.0).unwrap().powi(2) - exact).abs()
        };
        let coarse = err(64);
        let fine = err(129);
        assert!(coarse / fine >= 3.0, "{coarse} / {fine}");
    }

    fn random_field(grid: RadialGrid, amps: &[(f64, f64, f64)]) -> Field {
        Field::from_fn(grid, |r| {
            amps.iter()
                .map(|&(a, w, phase)| Complex64::from_polar(a * (-(r / w).powi(2)).exp(), phase * r))
                .sum()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip(amps in proptest::collection::vec((-2.0f64..2.0, 0.3f64..3.0, -2.0f64..2.0), 1..4),
                      noise in proptest::collection::vec(-1.0f64..1.0, 128)) {
            let grid = RadialGrid::new(12.0, 128).unwrap();
            let base = random_field(grid, &amps);
            let values: Vec<Complex64> = base.values().iter().zip(&noise)
                .map(|(z, e)| z + Complex64::new(*e, -0.5 * e)).collect();
            let u = Field::new(grid, values).unwrap();
            let back = from_spectral(&to_spectral(&u));
            let scale = u.sup().max(1e-300);
            for (a, b) in back.values().iter().zip(u.values()) {
                prop_assert!((a - b).norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn laplacian_is_symmetric(a in proptest::collection::vec(-1.0f64..1.0, 96),
                                  b in proptest::collection::vec(-1.0f64..1.0, 96)) {
            let grid = RadialGrid::new(6.0, 96).unwrap();
            let u = Field::from_real(grid, &a).unwrap();
            let w = Field::from_real(grid, &b).unwrap();
            let inner = |x: &Field, y: &Field| radial_moment(&grid, |i| (x.values()[i] * y.values()[i].conj()).re, 2);
            let lu = apply_laplacian(&u);
            let lw = apply_laplacian(&w);
            let left = inner(&lu, &w);
            let right = inner(&u, &lw);
            prop_assert!((left - right).abs() <= 1e-10 * left.abs().max(right.abs()).max(1.0));
        }

        #[test]
        fn parseval(amps in proptest::collection::vec((-2.0f64..2.0, 0.3f64..3.0, -2.0f64..2.0), 1..4)) {
            let grid = RadialGrid::new(12.0, 200).unwrap();
            let u = random_field(grid, &amps);
            let m = lp_norm(&u, 2.0).unwrap().powi(2);
            let h0 = hdot_norm_sq(&u, 0.0).unwrap();
            prop_assert!((m - h0).abs() <= 1e-10 * m.max(1e-300));
        }
    }
}
