//! Time stepping for `i u_t = -Δu - (K/r) u + λ|u|^{p-1} u`.
//!
//! [`Stepper`] is a Strang splitting: half a step of the local phase
//! `exp(-i (dt/2) λ|u|^{p-1})`, the exact flow of `-Δ - K/r` on the sine
//! coefficients (see [`crate::coulomb`]), and the second half phase on the
//! updated field. [`cn_reference_step`] is an independent implicit-midpoint
//! integrator on a three-point grid used as an oracle.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coulomb::LinearPropagator;
use crate::diagnostics::{diagnostics_record, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::RadialGrid;
use crate::ground_states::{shoot_ground_state, ShootKind, SHOOT_TOL};
use crate::params::PhysParams;
use crate::spectral::{hdot_from_coeffs, sine_plans};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One Strang step of fixed size on a fixed grid.
pub struct Stepper {
    params: PhysParams,
    grid: RadialGrid,
    dt: f64,
    linear: LinearPropagator,
}

impl Stepper {
    pub fn new(params: PhysParams, grid: RadialGrid, dt: f64) -> Result<Self> {
        Self::with_dynamics_k(params, grid, dt, params.k)
    }

    /// Same as [`Stepper::new`] but the linear flow uses coupling `k_dyn`
    /// instead of `params.k`. Only the self-test mutation uses this.
    pub(crate) fn with_dynamics_k(
        params: PhysParams,
        grid: RadialGrid,
        dt: f64,
        k_dyn: f64,
    ) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("{dt} must be finite and ≥ 0")));
        }
        Ok(Stepper {
            params,
            grid,
            dt,
            linear: LinearPropagator::new(&grid, k_dyn, dt),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn step(&self, u: &Field) -> Result<Field> {
        self.grid.check_len(u.len())?;
        if u.grid() != &self.grid {
            return Err(Error::param("grid", "field grid differs from stepper grid"));
        }
        let mut values = u.values().to_vec();
        self.step_in_place(&mut values);
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("strang_step"));
        }
        Field::new(self.grid, values)
    }

    pub(crate) fn step_in_place(&self, values: &mut [Complex64]) {
        let half = 0.5 * self.dt;
        self.phase(values, half);
        let n = self.grid.len();
        let h = self.grid.spacing();
        let plans = sine_plans(n);
        let mut v: Vec<Complex64> = values
            .iter()
            .enumerate()
            .map(|(i, u)| u * ((i + 1) as f64 * h))
            .collect();
        let mut coeffs = vec![ZERO; n];
        plans.forward(&v, &mut coeffs);
        self.linear.apply(&mut coeffs);
        plans.inverse(&coeffs, &mut v);
        for (i, (u, w)) in values.iter_mut().zip(&v).enumerate() {
            *u = w / ((i + 1) as f64 * h);
        }
        self.phase(values, half);
    }

    fn phase(&self, values: &mut [Complex64], tau: f64) {
        if self.params.lambda == 0 || tau == 0.0 {
            return;
        }
        let lam = self.params.lambda_f64();
        let q = 0.5 * (self.params.p - 1.0);
        for u in values.iter_mut() {
            let a = u.norm_sqr();
            let rate = lam * if q == 1.0 { a } else { a.powf(q) };
            *u *= Complex64::from_polar(1.0, -tau * rate);
        }
    }
}

/// One Strang step; see [`Stepper`] for repeated steps.
pub fn strang_step(u: &Field, dt: f64, params: &PhysParams) -> Result<Field> {
    if !u.is_finite() {
        return Err(Error::NonFinite("strang_step input"));
    }
    Stepper::new(*params, *u.grid(), dt)?.step(u)
}

const CN_MAX_ITER: usize = 20;
const CN_TOL: f64 = 1e-12;

/// One implicit-midpoint step with the three-point Laplacian on `v = r u` and
/// the pointwise potential `-K/r_j`; the nonlinear midpoint is resolved by
/// fixed-point iteration.
pub fn cn_reference_step(u: &Field, dt: f64, params: &PhysParams) -> Result<Field> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("{dt} must be positive")));
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("cn_reference_step input"));
    }
    let grid = *u.grid();
    let n = grid.len();
    let h = grid.spacing();
    let nodes = grid.nodes();
    let v0: Vec<Complex64> = u.values().iter().zip(&nodes).map(|(z, r)| z * r).collect();
    let off = Complex64::new(0.0, -0.5 * dt / (h * h));
    let lam = params.lambda_f64();
    let q = 0.5 * (params.p - 1.0);

    // right-hand side uses the same midpoint potential as the matrix
    let solve = |w: &[f64]| -> Vec<Complex64> {
        let diag: Vec<Complex64> = w
            .iter()
            .map(|wj| Complex64::new(1.0, 0.5 * dt * (2.0 / (h * h) + wj)))
            .collect();
        let mut rhs = vec![ZERO; n];
        for j in 0..n {
            let lap = -2.0 * v0[j]
                + if j > 0 { v0[j - 1] } else { ZERO }
                + if j + 1 < n { v0[j + 1] } else { ZERO };
            let lv = -lap / (h * h) + v0[j] * w[j];
            rhs[j] = v0[j] - Complex64::new(0.0, 0.5 * dt) * lv;
        }
        thomas(off, &diag, &mut rhs);
        rhs
    };
    let potential = |mid: &[Complex64]| -> Vec<f64> {
        mid.iter()
            .zip(&nodes)
            .map(|(v, r)| {
                let a = (v / r).norm_sqr();
                -params.k / r + lam * if q == 1.0 { a } else { a.powf(q) }
            })
            .collect()
    };

    let mut v1 = solve(&potential(&v0));
    if params.lambda != 0 {
        let mut converged = false;
        let mut change = f64::INFINITY;
        for _ in 0..CN_MAX_ITER {
            let mid: Vec<Complex64> = v0.iter().zip(&v1).map(|(a, b)| 0.5 * (a + b)).collect();
            let next = solve(&potential(&mid));
            let scale = next.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
            change = next
                .iter()
                .zip(&v1)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
                / scale;
            v1 = next;
            if change < CN_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotConverged {
                what: "Crank–Nicolson fixed point",
                iterations: CN_MAX_ITER,
                last_change: change,
            });
        }
    }
    let values = v1.iter().zip(&nodes).map(|(v, r)| v / r).collect();
    Field::new(grid, values)
}

/// Tridiagonal solve with constant off-diagonal `off`; overwrites `rhs`.
fn thomas(off: Complex64, diag: &[Complex64], rhs: &mut [Complex64]) {
    let n = diag.len();
    let mut c = vec![ZERO; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for j in 1..n {
        c[j] = off / beta;
        beta = diag[j] - off * c[j];
        rhs[j] = (rhs[j] - off * rhs[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        let next = rhs[j + 1];
        rhs[j] -= c[j + 1] * next;
    }
}

/// Blow-up and underflow thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorThresholds {
    /// Stop when `‖u‖_{Ḣ¹}` exceeds this multiple of its initial value.
    pub h1_factor: f64,
    /// Stop when `max|u|` exceeds this.
    pub sup_max: f64,
    /// Stop with underflow when the step drops below this.
    pub dt_min: f64,
}

impl Default for DetectorThresholds {
    fn default() -> Self {
        DetectorThresholds {
            h1_factor: 10.0,
            sup_max: 1e3,
            dt_min: 1e-9,
        }
    }
}

/// Initial data families.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `A e^{-(r/w)²}`.
    Gaussian { amplitude: f64, width: f64 },
    /// `A e^{-(K/2) r}`, the linear bound state for `K > 0`.
    BoundState { amplitude: f64 },
    /// The shot soliton `f(K, p)`.
    Soliton,
    /// `scale · Q(p)`.
    GroundState { scale: f64 },
    /// Explicit samples on the run grid.
    Samples(Field),
}

impl InitialData {
    pub fn build(&self, grid: &RadialGrid, params: &PhysParams) -> Result<Field> {
        match self {
            InitialData::Gaussian { amplitude, width } => {
                if !(*width > 0.0) {
                    return Err(Error::param("width", "must be positive"));
                }
                let (a, w) = (*amplitude, *width);
                Ok(Field::from_real_fn(*grid, |r| a * (-(r / w) * (r / w)).exp()))
            }
            InitialData::BoundState { amplitude } => {
                if !(params.k > 0.0) {
                    return Err(Error::param("K", "bound state needs K > 0"));
                }
                let (a, c) = (*amplitude, 0.5 * params.k);
                Ok(Field::from_real_fn(*grid, |r| a * (-c * r).exp()))
            }
            InitialData::Soliton => Ok(shoot_ground_state(
                ShootKind::F {
                    k: params.k,
                    p: params.p,
                },
                grid,
                SHOOT_TOL,
            )?
            .profile),
            InitialData::GroundState { scale } => {
                let q = shoot_ground_state(ShootKind::Q { p: params.p }, grid, SHOOT_TOL)?;
                Ok(q.profile.scale(Complex64::new(*scale, 0.0)))
            }
            InitialData::Samples(f) => {
                if f.grid() != grid {
                    return Err(Error::GridMismatch {
                        expected: grid.len(),
                        actual: f.len(),
                    });
                }
                Ok(f.clone())
            }
        }
    }
}

/// Deliberate defects for the self-test's mutation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Evolve with `-K` while diagnostics keep `K`.
    FlipCoulombSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub params: PhysParams,
    pub grid: RadialGrid,
    pub initial: InitialData,
    pub dt: f64,
    pub t_max: f64,
    pub adaptive: bool,
    /// Largest factor by which the adaptive step may grow per step.
    pub growth_cap: f64,
    pub detector: DetectorThresholds,
    /// Cosine-squared mask over the outer 10% of the radius, once per step.
    pub absorber: bool,
    pub sample_stride: usize,
    /// Keep a field snapshot every this many samples (for local averages).
    pub snapshot_stride: Option<usize>,
    pub mutation: Option<Mutation>,
}

impl EvolveConfig {
    pub fn new(params: PhysParams, grid: RadialGrid, initial: InitialData, dt: f64, t_max: f64) -> Self {
        EvolveConfig {
            params,
            grid,
            initial,
            dt,
            t_max,
            adaptive: false,
            growth_cap: 2.0,
            detector: DetectorThresholds::default(),
            absorber: false,
            sample_stride: 1,
            snapshot_stride: None,
            mutation: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::param("tmax", "must be positive"));
        }
        if !(self.detector.dt_min < self.dt) {
            return Err(Error::param("dt_min", "must be below dt"));
        }
        if !(self.detector.h1_factor > 1.0) {
            return Err(Error::param("h1_factor", "must exceed 1"));
        }
        if !(self.detector.sup_max > 0.0) {
            return Err(Error::param("sup_max", "must be positive"));
        }
        if self.sample_stride == 0 {
            return Err(Error::param("sample_stride", "must be at least 1"));
        }
        if !(self.growth_cap >= 1.0) {
            return Err(Error::param("growth_cap", "must be at least 1"));
        }
        if self.snapshot_stride == Some(0) {
            return Err(Error::param("snapshot_stride", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    BlowupDetected,
    StepUnderflow,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::BlowupDetected => "blowup_detected",
            Status::StepUnderflow => "step_underflow",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub params: PhysParams,
    pub samples: Vec<DiagnosticsRecord>,
    pub status: Status,
    /// Set when the run stopped on a non-finite value.
    pub poisoned: bool,
    pub initial_field: Field,
    pub final_field: Field,
    pub final_time: f64,
    pub snapshots: Vec<(f64, Field)>,
    pub steps: usize,
}

impl TimeSeries {
    /// `max |M(t)/M(0) - 1|` over the samples.
    pub fn mass_drift(&self) -> f64 {
        relative_drift(self.samples.iter().map(|r| r.mass))
    }

    /// `max |E(t) - E(0)| / |E(0)|` over the samples.
    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.samples.iter().map(|r| r.energy))
    }
}

fn relative_drift(mut values: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = values.next() else {
        return 0.0;
    };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    values.map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
}

pub fn evolve(config: &EvolveConfig) -> Result<TimeSeries> {
    config.validate()?;
    let u0 = config.initial.build(&config.grid, &config.params)?;
    run(config, u0)
}

/// Same as [`evolve`] with explicit initial samples.
pub fn evolve_from(config: &EvolveConfig, u0: Field) -> Result<TimeSeries> {
    config.validate()?;
    if u0.grid() != &config.grid {
        return Err(Error::GridMismatch {
            expected: config.grid.len(),
            actual: u0.len(),
        });
    }
    if !u0.is_finite() {
        return Err(Error::NonFinite("initial data"));
    }
    run(config, u0)
}

fn absorber_mask(grid: &RadialGrid) -> Vec<f64> {
    let r_max = grid.r_max();
    let start = 0.9 * r_max;
    grid.nodes()
        .iter()
        .map(|&r| {
            if r < start {
                1.0
            } else {
                let x = std::f64::consts::FRAC_PI_2 * (r - start) / (r_max - start);
                x.cos().powi(2)
            }
        })
        .collect()
}

fn h1_of(values: &[Complex64], grid: &RadialGrid) -> f64 {
    let h = grid.spacing();
    let v: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(i, u)| u * ((i + 1) as f64 * h))
        .collect();
    let mut coeffs = vec![ZERO; grid.len()];
    sine_plans(grid.len()).forward(&v, &mut coeffs);
    hdot_from_coeffs(&coeffs, grid, 1.0).sqrt()
}

fn sup_of(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn run(config: &EvolveConfig, u0: Field) -> Result<TimeSeries> {
    let params = config.params;
    let grid = config.grid;
    let k_dyn = match config.mutation {
        Some(Mutation::FlipCoulombSign) => -params.k,
        None => params.k,
    };
    let mask = config.absorber.then(|| absorber_mask(&grid));
    let mut steppers: HashMap<u64, Stepper> = HashMap::new();

    let pm1 = params.p - 1.0;
    let sup0 = u0.sup();
    let c_a = config.dt * (1.0 + sup0.powf(pm1));
    let h1_0 = h1_of(u0.values(), &grid);
    let det = config.detector;

    let mut samples = vec![diagnostics_record(&u0, &params, 0.0, 0.0)];
    let mut snapshots = Vec::new();
    let snap = config.snapshot_stride;
    if snap.is_some() {
        snapshots.push((0.0, u0.clone()));
    }
    let mut values = u0.values().to_vec();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut dt_prev = config.dt;
    let mut status = Status::Completed;
    let mut poisoned = false;
    let mut last_sampled_step = 0usize;

    while t < config.t_max {
        let mut dt = config.dt;
        if config.adaptive {
            let sup = sup_of(&values);
            let target = (c_a / (1.0 + sup.powf(pm1))).min(config.dt);
            // powers-of-two ladder below dt₀ so propagators can be reused
            while dt > target && dt > 0.5 * det.dt_min {
                dt *= 0.5;
            }
            while dt > config.growth_cap * dt_prev {
                dt *= 0.5;
            }
        }
        if dt < det.dt_min {
            status = Status::StepUnderflow;
            break;
        }
        let remaining = config.t_max - t;
        let last = remaining <= dt * (1.0 + 1e-9);
        if last && (remaining - dt).abs() > 1e-9 * dt {
            dt = remaining;
        }
        let stepper = match steppers.entry(dt.to_bits()) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(Stepper::with_dynamics_k(params, grid, dt, k_dyn)?),
        };
        let previous = values.clone();
        stepper.step_in_place(&mut values);
        if let Some(m) = &mask {
            for (u, w) in values.iter_mut().zip(m) {
                *u *= w;
            }
        }
        steps += 1;
        t = if last { config.t_max } else { t + dt };
        dt_prev = dt;

        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            values = previous;
            status = Status::StepUnderflow;
            poisoned = true;
            break;
        }
        let sup = sup_of(&values);
        let h1 = h1_of(&values, &grid);
        let blowup = h1 > det.h1_factor * h1_0 || sup > det.sup_max;
        if blowup || steps % config.sample_stride == 0 || last {
            let field = Field::new(grid, values.clone())?;
            samples.push(diagnostics_record(&field, &params, t, dt));
            last_sampled_step = steps;
            if let Some(s) = snap {
                if (samples.len() - 1) % s == 0 || blowup || last {
                    snapshots.push((t, field));
                }
            }
        }
        if blowup {
            status = Status::BlowupDetected;
            break;
        }
    }
    let final_field = Field::new(grid, values)?;
    if last_sampled_step != steps && !poisoned {
        samples.push(diagnostics_record(&final_field, &params, t, dt_prev));
    }
    Ok(TimeSeries {
        params,
        samples,
        status,
        poisoned,
        initial_field: u0,
        final_field,
        final_time: t,
        snapshots,
        steps,
    })
}

/// `e^{-r²}` evolved by the free flow (`K = 0`, `λ = 0`):
/// `(1 + 4it)^{-3/2} exp(-r² / (1 + 4it))`.
pub fn free_gaussian(grid: &RadialGrid, t: f64) -> Field {
    let z = Complex64::new(1.0, 4.0 * t);
    let pre = z.powf(-1.5);
    Field::from_fn(*grid, |r| pre * (-(r * r) / z).exp())
}

/// Strang against Crank–Nicolson at three step sizes halving each time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOrder {
    pub dts: [f64; 3],
    /// `‖S_dt(t) u₀ - CN_dt(t) u₀‖₂` for each step.
    pub discrepancies: [f64; 3],
    /// `log₂` ratios of consecutive discrepancies.
    pub plain_orders: [f64; 2],
    /// `log₂(‖D₁ - D₂‖ / ‖D₂ - D₃‖)` with `D_i` the discrepancy fields; the
    /// step-independent spatial part (spectral vs three-point Laplacian)
    /// cancels in the differences.
    pub richardson_order: f64,
}

pub fn oracle_order(u0: &Field, params: &PhysParams, t: f64, dt_coarse: f64) -> Result<OracleOrder> {
    let dts = [dt_coarse, 0.5 * dt_coarse, 0.25 * dt_coarse];
    let l2 = |f: &Field| crate::spectral::lp_norm(f, 2.0);
    let mut fields = Vec::with_capacity(3);
    let mut discrepancies = [0.0; 3];
    for (i, &dt) in dts.iter().enumerate() {
        let steps = (t / dt).round() as usize;
        if steps == 0 || ((steps as f64) * dt - t).abs() > 1e-9 * t {
            return Err(Error::param("dt", format!("{dt} does not divide t = {t}")));
        }
        let stepper = Stepper::new(*params, *u0.grid(), dt)?;
        let (mut a, mut b) = (u0.clone(), u0.clone());
        for _ in 0..steps {
            a = stepper.step(&a)?;
            b = cn_reference_step(&b, dt, params)?;
        }
        let d = a.sub(&b)?;
        discrepancies[i] = l2(&d)?;
        fields.push(d);
    }
    let plain_orders = [
        (discrepancies[0] / discrepancies[1]).log2(),
        (discrepancies[1] / discrepancies[2]).log2(),
    ];
    let r1 = l2(&fields[0].sub(&fields[1])?)?;
    let r2 = l2(&fields[1].sub(&fields[2])?)?;
    Ok(OracleOrder {
        dts,
        discrepancies,
        plain_orders,
        richardson_order: (r1 / r2).log2(),
    })
}
