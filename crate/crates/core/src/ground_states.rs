//! Ground-state profiles: `Q` (`-ΔQ + Q = Qᵖ`), the closed-form `W`
//! (`-ΔW = W⁵`) and the Coulomb soliton `f`
//! (`-Δf - (K/r) f + f + fᵖ = 0`), plus the sharp constants built from `Q`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField};
use crate::grid::RadialGrid;
use crate::params::PhysParams;
use crate::spectral::{self, from_spectral, hdot_norm_sq, lp_integral, to_spectral, Weight};

/// Which profile a [`GroundState`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProfileKind {
    Q { p: f64 },
    W,
    #[serde(rename = "f")]
    F { k: f64, p: f64 },
    /// Focusing Coulomb ground state `-Δu + u - (K/r) u = uᵖ`, `K ≠ 0`.
    CoulombQ { k: f64, p: f64 },
    /// Energy minimizer at fixed mass.
    Constrained { k: f64, lambda: i8, p: f64, mass: f64 },
}

impl ProfileKind {
    pub fn p(&self) -> f64 {
        match *self {
            ProfileKind::Q { p }
            | ProfileKind::F { p, .. }
            | ProfileKind::CoulombQ { p, .. }
            | ProfileKind::Constrained { p, .. } => p,
            ProfileKind::W => 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    /// `‖·‖_{L²}`; meaningless when `l2_divergent` is set.
    pub l2: f64,
    pub l2_divergent: bool,
    /// `‖·‖_{Ḣ¹}`.
    pub h1: f64,
    /// `‖·‖_{L^{p+1}}`.
    pub lp1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub kind: ProfileKind,
    pub profile: Field,
    /// Value at the origin.
    pub amplitude: f64,
    /// Sup norm of the ODE residual on the nodes.
    pub residual: f64,
    pub norms: Norms,
}

impl GroundState {
    /// Largest `j` such that the profile is positive and strictly decreasing
    /// on nodes `1..=j`.
    pub fn monotone_prefix(&self) -> usize {
        let v = self.profile.values();
        let mut j = 0;
        while j < v.len() && v[j].re > 0.0 && (j == 0 || v[j].re < v[j - 1].re) {
            j += 1;
        }
        j
    }
}

fn norms_of(profile: &Field, p: f64) -> Norms {
    Norms {
        l2: lp_integral(profile, 2.0).sqrt(),
        l2_divergent: false,
        h1: hdot_norm_sq(profile, 1.0).expect("s = 1").sqrt(),
        lp1: lp_integral(profile, p + 1.0).powf(1.0 / (p + 1.0)),
    }
}

/// Profiles reachable by shooting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShootKind {
    Q { p: f64 },
    F { k: f64, p: f64 },
}

impl ShootKind {
    fn p(self) -> f64 {
        match self {
            ShootKind::Q { p } | ShootKind::F { p, .. } => p,
        }
    }

    fn coulomb(self) -> f64 {
        match self {
            ShootKind::Q { .. } => 0.0,
            ShootKind::F { k, .. } => k,
        }
    }

    /// `φ''` from the radial ODE.
    fn accel(self, r: f64, phi: f64, dphi: f64) -> f64 {
        let pw = phi.abs().powf(self.p() - 1.0) * phi;
        match self {
            ShootKind::Q { .. } => -2.0 * dphi / r + phi - pw,
            ShootKind::F { k, .. } => -2.0 * dphi / r + phi + pw - k / r * phi,
        }
    }

    /// Series data `(φ(ε), φ'(ε))` for central value `a`.
    fn start(self, a: f64, eps: f64) -> (f64, f64) {
        let p = self.p();
        match self {
            ShootKind::Q { .. } => {
                let b2 = (a - a.powf(p)) / 6.0;
                let b4 = b2 * (1.0 - p * a.powf(p - 1.0)) / 20.0;
                let e2 = eps * eps;
                (a + b2 * e2 + b4 * e2 * e2, 2.0 * b2 * eps + 4.0 * b4 * e2 * eps)
            }
            ShootKind::F { k, .. } => {
                let c1 = -0.5 * k;
                let ap = a.powf(p - 1.0);
                let c2 = (1.0 + ap + 0.5 * k * k) / 6.0;
                let c3 = (c1 * (1.0 + p * ap) - k * c2) / 12.0;
                (
                    a * (1.0 + eps * (c1 + eps * (c2 + eps * c3))),
                    a * (c1 + eps * (2.0 * c2 + 3.0 * eps * c3)),
                )
            }
        }
    }
}

/// Default residual tolerance for the shooting solver.
pub const SHOOT_TOL: f64 = 1e-8;

const SCAN_LO: f64 = 1e-3;
const SCAN_HI: f64 = 1e3;
const SCAN_POINTS: usize = 241;
const MIN_SUBSTEPS: usize = 8;
/// Largest RK4 step; finer than `h/8` on coarse grids.
const MAX_STEP: f64 = 5e-4;
const AGREE_REL: f64 = 1e-6;
const REFINE: usize = 32;
const REFINE_ZONE: f64 = 256.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Crosses,
    Diverges,
    Reached,
}

fn substeps(grid: &RadialGrid) -> usize {
    let m = (grid.spacing() / (MIN_SUBSTEPS as f64 * MAX_STEP)).ceil().max(1.0) as usize;
    MIN_SUBSTEPS * m
}

struct Trajectory {
    outcome: Outcome,
    substeps: usize,
    /// `(φ, φ')` at every RK4 substep starting at `r = h/2`.
    fine: Vec<(f64, f64)>,
}

impl Trajectory {
    /// `(φ, φ')` at node `j`, if reached.
    fn at_node(&self, j: usize) -> Option<(f64, f64)> {
        self.fine.get(self.substeps * j - self.substeps / 2).copied()
    }
}

fn rk4<F: Fn(f64, f64, f64) -> f64>(f: &F, r: f64, s: f64, y: (f64, f64)) -> (f64, f64) {
    let (a, b) = y;
    let k1 = (b, f(r, a, b));
    let k2 = (b + 0.5 * s * k1.1, f(r + 0.5 * s, a + 0.5 * s * k1.0, b + 0.5 * s * k1.1));
    let k3 = (b + 0.5 * s * k2.1, f(r + 0.5 * s, a + 0.5 * s * k2.0, b + 0.5 * s * k2.1));
    let k4 = (b + s * k3.1, f(r + s, a + s * k3.0, b + s * k3.1));
    (
        a + s / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        b + s / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

fn integrate(kind: ShootKind, a: f64, grid: &RadialGrid, keep: bool) -> Trajectory {
    let h = grid.spacing();
    let substeps = substeps(grid);
    let s = h / substeps as f64;
    let eps = 0.5 * h;
    let total = substeps * grid.len() + substeps / 2;
    let mut y = kind.start(a, eps);
    let mut fine = Vec::with_capacity(if keep { total + 1 } else { 0 });
    if keep {
        fine.push(y);
    }
    let f = |r: f64, phi: f64, dphi: f64| kind.accel(r, phi, dphi);
    for i in 0..total {
        let r = eps + i as f64 * s;
        // the 2/r and K/r coefficients vary on the scale r; refine near 0
        if r < REFINE_ZONE * s {
            let sub = s / REFINE as f64;
            for m in 0..REFINE {
                y = rk4(&f, r + m as f64 * sub, sub, y);
            }
        } else {
            y = rk4(&f, r, s, y);
        }
        if keep {
            fine.push(y);
        }
        if !(y.0 >= 0.0) {
            return Trajectory {
                outcome: Outcome::Crosses,
                substeps,
                fine,
            };
        }
        if y.1 > 0.0 {
            return Trajectory {
                outcome: Outcome::Diverges,
                substeps,
                fine,
            };
        }
    }
    Trajectory {
        outcome: Outcome::Reached,
        substeps,
        fine,
    }
}

/// Shoots `Q(p)` or `f(K, p)` on `grid` and returns the profile on the nodes.
///
/// The central amplitude is bisected between trajectories that cross zero and
/// trajectories that turn upward; the decaying tail beyond the point where the
/// two bracketing trajectories separate is continued with the linearized
/// equation `(r φ)'' = (1 - K/r) r φ`, integrated inward from the wall.
pub fn shoot_ground_state(kind: ShootKind, grid: &RadialGrid, tol: f64) -> Result<GroundState> {
    let p = kind.p();
    match kind {
        ShootKind::Q { .. } if !(p > 1.0 && p < 5.0) => {
            return Err(Error::param("p", format!("Q needs 1 < p < 5, got {p}")));
        }
        ShootKind::F { k, .. } if !(k > 0.0 && p > 1.0 && p <= 5.0) => {
            return Err(Error::param("K", format!("f needs K > 0 and 1 < p ≤ 5, got K={k}, p={p}")));
        }
        _ => {}
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }

    // scan for a sign change of the outcome
    let ratio = (SCAN_HI / SCAN_LO).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let mut prev: Option<(f64, Outcome)> = None;
    let mut bracket = None;
    for i in 0..SCAN_POINTS {
        let a = SCAN_LO * ratio.powi(i as i32);
        let out = integrate(kind, a, grid, false).outcome;
        if out == Outcome::Reached {
            bracket = Some(((a, out), (a, out)));
            break;
        }
        if let Some((a0, o0)) = prev {
            if o0 != out {
                bracket = Some(((a0, o0), (a, out)));
                break;
            }
        }
        prev = Some((a, out));
    }
    let ((mut lo, lo_out), (mut hi, _)) = bracket.ok_or(Error::NoBracket {
        lo: SCAN_LO,
        hi: SCAN_HI,
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let out = integrate(kind, mid, grid, false).outcome;
        if out == Outcome::Reached {
            lo = mid;
            hi = mid;
            break;
        }
        if out == lo_out {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_lo = integrate(kind, lo, grid, true);
    let t_hi = integrate(kind, hi, grid, true);

    let n = grid.len();
    let h = grid.spacing();
    let mut core = Vec::with_capacity(n);
    for j in 1..=n {
        match (t_lo.at_node(j), t_hi.at_node(j)) {
            (Some(x), Some(y))
                if x.0 > 0.0 && y.0 > 0.0 && (x.0 - y.0).abs() <= AGREE_REL * x.0.max(y.0) =>
            {
                core.push((0.5 * (x.0 + y.0), 0.5 * (x.1 + y.1)));
            }
            _ => break,
        }
    }
    let j_match = core.len();
    let min_reach = (0.5 * grid.r_max()).min(8.0);
    if (j_match as f64) * h < min_reach {
        return Err(Error::NotConverged {
            what: "shooting (bracketing trajectories separate too early)",
            iterations: 200,
            last_change: (hi - lo) / lo,
        });
    }

    let mut values = vec![0.0; n];
    for (j, v) in core.iter().enumerate() {
        values[j] = v.0;
    }
    if j_match < n {
        extend_tail(&mut values, j_match, grid, kind.coulomb());
    }

    // residual: 6th-order differences of φ' on the RK4 substeps in the core,
    // centered node differences in the tail
    let sub = t_lo.substeps;
    let s = h / sub as f64;
    let mut residual: f64 = 0.0;
    let fine_len = t_lo.fine.len().min(t_hi.fine.len());
    let avg = |i: usize| {
        let a = t_lo.fine[i];
        let b = t_hi.fine[i];
        (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))
    };
    for j in 1..=j_match {
        let i = sub * j - sub / 2;
        if i + 3 >= fine_len || i < 3 {
            continue;
        }
        let d = |m: usize| avg(i + m).1 - avg(i - m).1;
        let d2 = (45.0 * d(1) - 9.0 * d(2) + d(3)) / (60.0 * s);
        let (phi, dphi) = avg(i);
        let r = grid.node(j);
        residual = residual.max((d2 - kind.accel(r, phi, dphi)).abs());
    }
    for j in (j_match + 1).max(2)..n {
        let (a, b, c) = (values[j - 2], values[j - 1], values[j]);
        let r = grid.node(j);
        let d2 = (a - 2.0 * b + c) / (h * h);
        let d1 = (c - a) / (2.0 * h);
        residual = residual.max((d2 - kind.accel(r, b, d1)).abs());
    }
    if !(residual < tol) {
        return Err(Error::NotConverged {
            what: "shooting residual",
            iterations: 200,
            last_change: residual,
        });
    }

    let amplitude = 0.5 * (lo + hi);
    let profile = Field::from_real(*grid, &values)?;
    let norms = norms_of(&profile, p);
    let kind = match kind {
        ShootKind::Q { p } => ProfileKind::Q { p },
        ShootKind::F { k, p } => ProfileKind::F { k, p },
    };
    Ok(GroundState {
        kind,
        profile,
        amplitude,
        residual,
        norms,
    })
}

/// Continues `values[j_match..]` with the decaying solution of
/// `v'' = (1 - K/r) v`, `v = r φ`, vanishing at the wall.
fn extend_tail(values: &mut [f64], j_match: usize, grid: &RadialGrid, k: f64) {
    let n = grid.len();
    let h = grid.spacing();
    let sub = substeps(grid);
    let s = h / sub as f64;
    // start no further out than the range where e^{r} stays representable
    let j_start = (n + 1).min(j_match + (600.0 / h) as usize);
    let f = |r: f64, v: f64, _dv: f64| (1.0 - k / r) * v;
    let mut y = (0.0, -1.0);
    let mut tail = vec![0.0; j_start + 1];
    for j in (j_match..j_start).rev() {
        for i in 0..sub {
            let r = grid.node(j + 1) - i as f64 * s;
            y = rk4(&f, r, -s, y);
        }
        tail[j] = y.0;
    }
    let r_m = grid.node(j_match);
    let scale = values[j_match - 1] * r_m / tail[j_match];
    for j in j_match + 1..=n.min(j_start.saturating_sub(1)) {
        values[j - 1] = scale * tail[j] / grid.node(j);
    }
    for v in values.iter_mut().skip(j_start.saturating_sub(1)) {
        *v = 0.0;
    }
}

/// `W(r) = (1 + r²/3)^{-1/2}` with its residual checked on the nodes.
///
/// The reported norms are the whole-space values `‖∇W‖² = ‖W‖₆⁶ = 3√3π²/4`;
/// `‖W‖_{L²}` is infinite and flagged divergent.
pub fn explicit_w(grid: &RadialGrid) -> GroundState {
    let w = |r: f64| (1.0 + r * r / 3.0).powf(-0.5);
    let profile = Field::from_real_fn(*grid, w);
    let residual = grid
        .nodes()
        .into_iter()
        .filter(|&r| r <= 10.0)
        .map(w_residual)
        .fold(0.0, f64::max);
    let h1_sq = w_gradient_sq();
    GroundState {
        kind: ProfileKind::W,
        profile,
        amplitude: 1.0,
        residual,
        norms: Norms {
            l2: f64::INFINITY,
            l2_divergent: true,
            h1: h1_sq.sqrt(),
            lp1: h1_sq.powf(1.0 / 6.0),
        },
    }
}

/// `‖∇W‖²_{L²(ℝ³)}`.
pub fn w_gradient_sq() -> f64 {
    0.75 * 3f64.sqrt() * PI * PI
}

/// `W'' + (2/r) W' + W⁵` from the analytic derivatives.
pub fn w_residual(r: f64) -> f64 {
    let q = 1.0 + r * r / 3.0;
    let w = q.powf(-0.5);
    let d1 = -r / 3.0 * q.powf(-1.5);
    let d2 = -q.powf(-1.5) / 3.0 + r * r / 3.0 * q.powf(-2.5);
    d2 + 2.0 * d1 / r + w.powi(5)
}

/// Truncated `4π ∫_0^{R} W² r² dr = 12π (R - √3 atan(R/√3))`.
pub fn w_truncated_mass(r_max: f64) -> f64 {
    let s3 = 3f64.sqrt();
    12.0 * PI * (r_max - s3 * (r_max / s3).atan())
}

/// Sharp constants and identities built from a shot `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub p: f64,
    pub s_c: f64,
    /// Sharp Gagliardo–Nirenberg constant `C₀`.
    pub c0: f64,
    /// `|C₀ ‖Q‖₂^{(1-s_c)(p-1)} ‖Q‖_{Ḣ¹}^{s_c(p-1)} / (2(p+1)/(3(p-1))) - 1|`.
    pub identity_qah1_residual: f64,
    /// `|E₀(Q) - (3p-7)/(6(p-1)) ‖Q‖²_{Ḣ¹}| / ‖Q‖²_{Ḣ¹}` and
    /// `|E₀(Q) - (3p-7)/(4(p+1)) ‖Q‖^{p+1}_{p+1}| / ‖Q‖²_{Ḣ¹}`.
    pub energy_identity_residuals: [f64; 2],
    pub e0_q: f64,
    pub mass_q: f64,
    /// `M(Q)^{1-s_c} E₀(Q)^{s_c}`.
    pub threshold_mass_energy: f64,
    /// `‖Q‖₂^{1-s_c} ‖Q‖_{Ḣ¹}^{s_c}`.
    pub threshold_mass_gradient: f64,
    pub norms: Norms,
    pub amplitude: f64,
    pub residual: f64,
}

pub fn constants_report(q: &GroundState, p: f64) -> Result<ConstantsReport> {
    match q.kind {
        ProfileKind::Q { p: qp } if (qp - p).abs() < 1e-12 => {}
        _ => return Err(Error::MissingReference("constants need Q(p)")),
    }
    let n = q.norms;
    if !(n.l2 > 0.0 && n.h1 > 0.0 && n.lp1 > 0.0) {
        return Err(Error::param("Q", "degenerate norms"));
    }
    let s_c = 1.5 - 2.0 / (p - 1.0);
    let h1_sq = n.h1 * n.h1;
    let lpp = n.lp1.powf(p + 1.0);
    let mass = n.l2 * n.l2;
    let c0 = lpp / (n.l2.powf(0.5 * (5.0 - p)) * n.h1.powf(1.5 * (p - 1.0)));
    let lhs = c0 * n.l2.powf((1.0 - s_c) * (p - 1.0)) * n.h1.powf(s_c * (p - 1.0));
    let rhs = 2.0 * (p + 1.0) / (3.0 * (p - 1.0));
    let e0 = 0.5 * h1_sq - lpp / (p + 1.0);
    let r1 = (e0 - (3.0 * p - 7.0) / (6.0 * (p - 1.0)) * h1_sq).abs() / h1_sq;
    let r2 = (e0 - (3.0 * p - 7.0) / (4.0 * (p + 1.0)) * lpp).abs() / h1_sq;
    Ok(ConstantsReport {
        p,
        s_c,
        c0,
        identity_qah1_residual: (lhs / rhs - 1.0).abs(),
        energy_identity_residuals: [r1, r2],
        e0_q: e0,
        mass_q: mass,
        threshold_mass_energy: mass.powf(1.0 - s_c) * e0.max(0.0).powf(s_c),
        threshold_mass_gradient: n.l2.powf(1.0 - s_c) * n.h1.powf(s_c),
        norms: n,
        amplitude: q.amplitude,
        residual: q.residual,
    })
}

/// Iteration history of [`imaginary_time_ground_traced`].
#[derive(Debug, Clone)]
pub struct DescentTrace {
    pub state: GroundState,
    /// Functional value after each projected step.
    pub functional: Vec<f64>,
    /// `‖u‖²₂` after each projected step.
    pub masses: Vec<f64>,
    pub iterations: usize,
}

/// Step size of the semi-implicit gradient flow.
const DESCENT_TAU: f64 = 0.5;
const DESCENT_MAX_ITER: usize = 50_000;

pub fn imaginary_time_ground(
    params: &PhysParams,
    grid: &RadialGrid,
    fixed_mass: Option<f64>,
    tol: f64,
) -> Result<GroundState> {
    imaginary_time_ground_traced(params, grid, fixed_mass, tol).map(|t| t.state)
}

/// Normalized gradient flow toward a ground state.
///
/// With `fixed_mass = Some(m)` it minimizes the energy at mass `m`, which
/// requires the energy to be bounded below at that mass (`λ = 1`, `λ = 0`
/// with `K > 0`, or `λ = -1` with `p < 7/3`). Without it, it minimizes
/// `‖∇u‖² + ‖u‖² - K ∫|u|²/r` at fixed `‖u‖_{p+1}` (focusing, `λ = -1`) and
/// rescales the minimizer to solve `-Δu + u - (K/r) u = uᵖ`, i.e. `Q` for
/// `K = 0`. Kinetic terms are implicit, the rest explicit.
pub fn imaginary_time_ground_traced(
    params: &PhysParams,
    grid: &RadialGrid,
    fixed_mass: Option<f64>,
    tol: f64,
) -> Result<DescentTrace> {
    let p = params.p;
    let k = params.k;
    let lam = params.lambda_f64();
    let bounded = match params.lambda {
        1 => true,
        0 => k > 0.0,
        _ => p < crate::params::P_MASS_CRITICAL - crate::params::CRITICAL_P_TOL,
    };
    match fixed_mass {
        Some(m) if !(m > 0.0 && m.is_finite()) => {
            return Err(Error::param("fixed_mass", format!("{m} must be positive")));
        }
        Some(_) if !bounded => {
            return Err(Error::param(
                "params",
                "energy is unbounded below at fixed mass for these parameters",
            ));
        }
        None if params.lambda != -1 => {
            return Err(Error::param("lambda", "the unconstrained ground state needs λ = -1"));
        }
        _ => {}
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }

    let kappa2: Vec<f64> = grid.wavenumbers().iter().map(|x| x * x).collect();
    let nodes = grid.nodes();
    let mut u: Vec<f64> = nodes.iter().map(|r| (-0.25 * r * r).exp()).collect();
    let shift = if fixed_mass.is_some() { 0.0 } else { 1.0 };
    let field = |u: &[f64]| Field::from_real(*grid, u).expect("finite");
    let power = |u: &[f64]| lp_integral(&field(u), p + 1.0);
    let mass = |u: &[f64]| lp_integral(&field(u), 2.0);
    let target = match fixed_mass {
        Some(m) => m,
        None => power(&u),
    };
    let project = |u: &mut Vec<f64>| {
        let c = match fixed_mass {
            Some(m) => (m / mass(u)).sqrt(),
            None => (target / power(u)).powf(1.0 / (p + 1.0)),
        };
        for v in u.iter_mut() {
            *v *= c;
        }
    };
    let functional = |u: &[f64]| -> f64 {
        let f = field(u);
        let g = hdot_norm_sq(&f, 1.0).expect("s = 1");
        let coul = spectral::weighted_integral(&f, Weight::InvR).expect("weight");
        let m = lp_integral(&f, 2.0);
        match fixed_mass {
            Some(_) => 0.5 * g - 0.5 * k * coul + lam / (p + 1.0) * lp_integral(&f, p + 1.0),
            None => g + m - k * coul,
        }
    };
    project(&mut u);

    let mut history = vec![functional(&u)];
    let mut masses = vec![mass(&u)];
    let mut iterations = 0;
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    while iterations < DESCENT_MAX_ITER {
        iterations += 1;
        // explicit part of the force
        // Lagrange multiplier; makes constrained fixed points eigenstates
        let mu = match fixed_mass {
            Some(_) => {
                let f = field(&u);
                let g = hdot_norm_sq(&f, 1.0).expect("s = 1");
                let coul = spectral::weighted_integral(&f, Weight::InvR).expect("weight");
                (g - k * coul + lam * power(&u)) / mass(&u)
            }
            None => history.last().copied().unwrap() / power(&u),
        };
        let rhs: Vec<Complex64> = u
            .iter()
            .zip(&nodes)
            .map(|(&v, &r)| {
                let nl = v.abs().powf(p - 1.0) * v;
                let force = k / r * v
                    + match fixed_mass {
                        Some(_) => mu * v - lam * nl,
                        None => mu * nl,
                    };
                Complex64::new(v + DESCENT_TAU * force, 0.0)
            })
            .collect();
        let spec = to_spectral(&Field::new(*grid, rhs)?);
        let coeffs = spec
            .coeffs()
            .iter()
            .zip(&kappa2)
            .map(|(c, k2)| c / (1.0 + DESCENT_TAU * (k2 + shift)))
            .collect();
        let next = from_spectral(&SpectralField::new(*grid, coeffs)?);
        let mut next: Vec<f64> = next.values().iter().map(|z| z.re).collect();
        project(&mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("imaginary-time iteration"));
        }
        let dnorm = field_l2_diff(grid, &next, &u);
        last_change = dnorm / mass(&u).sqrt();
        u = next;
        history.push(functional(&u));
        masses.push(mass(&u));
        if last_change < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            what: "imaginary-time descent",
            iterations,
            last_change,
        });
    }

    let (kind, values) = match fixed_mass {
        Some(m) => (
            ProfileKind::Constrained {
                k,
                lambda: params.lambda,
                p,
                mass: m,
            },
            u,
        ),
        None => {
            let mu = history.last().copied().unwrap() / power(&u);
            let c = mu.powf(1.0 / (p - 1.0));
            let kind = if k == 0.0 {
                ProfileKind::Q { p }
            } else {
                ProfileKind::CoulombQ { k, p }
            };
            (kind, u.iter().map(|v| v * c).collect())
        }
    };
    let profile = field(&values);
    let residual = stationary_residual(&profile, params, fixed_mass.is_some());
    let amplitude = spectral::origin_value(&profile).re;
    let norms = norms_of(&profile, p);
    Ok(DescentTrace {
        state: GroundState {
            kind,
            profile,
            amplitude,
            residual,
            norms,
        },
        functional: history,
        masses,
        iterations,
    })
}

fn field_l2_diff(grid: &RadialGrid, a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    lp_integral(&Field::from_real(*grid, &diff).expect("finite"), 2.0).sqrt()
}

/// Sup norm of the stationary-equation residual, spectral Laplacian.
fn stationary_residual(profile: &Field, params: &PhysParams, constrained: bool) -> f64 {
    let lap = spectral::apply_laplacian(profile);
    let grid = profile.grid();
    let p = params.p;
    let vals: Vec<f64> = profile.values().iter().map(|z| z.re).collect();
    let nodes = grid.nodes();
    // H u with H = -Δ - K/r (+1 for Q-type) and the nonlinear term
    let hu: Vec<f64> = vals
        .iter()
        .zip(lap.values())
        .zip(&nodes)
        .map(|((v, l), r)| -l.re - params.k / r * v)
        .collect();
    if constrained {
        let lam = params.lambda_f64();
        let g: Vec<f64> = vals
            .iter()
            .zip(&hu)
            .map(|(v, h)| h + lam * v.abs().powf(p - 1.0) * v)
            .collect();
        let num: f64 = vals.iter().zip(&g).zip(&nodes).map(|((v, g), r)| v * g * r * r).sum();
        let den: f64 = vals.iter().zip(&nodes).map(|(v, r)| v * v * r * r).sum();
        let mu = num / den;
        g.iter().zip(&vals).map(|(g, v)| (g - mu * v).abs()).fold(0.0, f64::max)
    } else {
        vals.iter()
            .zip(&hu)
            .map(|(v, h)| (h + v - v.abs().powf(p - 1.0) * v).abs())
            .fold(0.0, f64::max)
    }
}
