//! Monitored functionals: mass, energy, virial and Morawetz quantities,
//! thresholds, classification of initial data and time-averaged bounds.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coulomb::inverse_r_form;
use crate::error::{Error, Result};
use crate::evolution::TimeSeries;
use crate::field::{Field, SpectralField};
use crate::ground_states::{GroundState, ProfileKind};
use crate::params::{PhysParams, CRITICAL_P_TOL, P_ENERGY_CRITICAL, P_MASS_CRITICAL};
use crate::spectral::{
    self, hdot_from_coeffs, lp_integral, radial_derivative_from, to_spectral, Weight,
};

const FOUR_PI: f64 = 4.0 * PI;

/// One time slice of every monitored functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub energy0: f64,
    /// `‖u‖_{Ḣ¹}`.
    pub h1: f64,
    /// `‖u‖_{Ḣ^{1/2}}` (interval multiplier).
    pub hhalf: f64,
    pub y: f64,
    pub yprime: f64,
    pub ysecond_rhs: f64,
    /// Morawetz action `Im ∫ ū (x/|x|)·∇u`.
    pub action: f64,
    pub rate_lb: f64,
    /// `‖u‖_{L⁴}⁴`.
    pub l4: f64,
    pub sup: f64,
    pub dt: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str =
        "t,M,E,E0,h1,hhalf,y,yprime,ysecond_rhs,A,rate_lb,l4,sup,dt";

    /// Columns in header order.
    pub fn columns(&self) -> [f64; 14] {
        [
            self.t,
            self.mass,
            self.energy,
            self.energy0,
            self.h1,
            self.hhalf,
            self.y,
            self.yprime,
            self.ysecond_rhs,
            self.action,
            self.rate_lb,
            self.l4,
            self.sup,
            self.dt,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.columns().iter().all(|v| v.is_finite())
    }
}

/// Mass and energies of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub mass: f64,
    pub energy: f64,
    pub energy0: f64,
    /// `‖u‖²_{Ḣ¹}`.
    pub gradient_sq: f64,
    /// `∫ |u|²/|x|`.
    pub coulomb: f64,
    /// `‖u‖_{L^{p+1}}^{p+1}`.
    pub potential: f64,
}

pub fn energy_report(u: &Field, params: &PhysParams) -> EnergyReport {
    let spec = to_spectral(u);
    energy_parts(u, &spec, params)
}

fn energy_parts(u: &Field, spec: &SpectralField, params: &PhysParams) -> EnergyReport {
    let gradient_sq = hdot_from_coeffs(spec.coeffs(), u.grid(), 1.0);
    let mass = lp_integral(u, 2.0);
    let coulomb = inverse_r_form(spec.coeffs(), u.grid());
    let potential = lp_integral(u, params.p + 1.0);
    let nl = params.lambda_f64() / (params.p + 1.0) * potential;
    EnergyReport {
        mass,
        energy: 0.5 * gradient_sq - 0.5 * params.k * coulomb + nl,
        energy0: 0.5 * gradient_sq + nl,
        gradient_sq,
        coulomb,
        potential,
    }
}

/// `y = ∫|x|²|u|²`, `y' = 4 Im ∫ ū x·∇u` and the virial right-hand side
/// `8‖∇u‖² - 4K ∫|u|²/|x| + 12λ(p-1)/(p+1) ‖u‖_{p+1}^{p+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    pub y: f64,
    pub yprime: f64,
    pub ysecond_rhs: f64,
}

pub fn virial_report(u: &Field, params: &PhysParams) -> VirialReport {
    let spec = to_spectral(u);
    let (du, _) = radial_derivative_from(u, &spec);
    let e = energy_parts(u, &spec, params);
    virial_parts(u, &du, params, &e)
}

fn virial_parts(u: &Field, du: &Field, params: &PhysParams, e: &EnergyReport) -> VirialReport {
    let y = spectral::weighted_integral(u, Weight::RSquared).expect("bounded weight");
    let flux = current_moment(u, du, 3);
    VirialReport {
        y,
        yprime: 4.0 * flux,
        ysecond_rhs: virial_rhs(e, params),
    }
}

fn virial_rhs(e: &EnergyReport, params: &PhysParams) -> f64 {
    let p = params.p;
    8.0 * e.gradient_sq - 4.0 * params.k * e.coulomb
        + 12.0 * params.lambda_f64() * (p - 1.0) / (p + 1.0) * e.potential
}

/// `4π h Σ r^m Im(ū ∂_r u)`.
fn current_moment(u: &Field, du: &Field, m: i32) -> f64 {
    spectral::radial_moment(u.grid(), |i| (u.values()[i].conj() * du.values()[i]).im, m)
}

/// Morawetz action and its rate lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorawetzReport {
    pub action: f64,
    pub rate_lb: f64,
}

/// `A = Im ∫ ū ∂_r u` and
/// `rate_lb = -(K/2) ∫|u|²/|x|² + λ 2(p-1)/(p+1) ∫ |u|^{p+1}/|x|`.
pub fn morawetz_report(u: &Field, params: &PhysParams) -> MorawetzReport {
    let spec = to_spectral(u);
    let (du, _) = radial_derivative_from(u, &spec);
    morawetz_parts(u, &du, params)
}

fn morawetz_parts(u: &Field, du: &Field, params: &PhysParams) -> MorawetzReport {
    let p = params.p;
    let inv_r2 = spectral::weighted_integral(u, Weight::InvRSquared).expect("unbounded weight");
    // r |u|^{p+1} has slope |u(0)|^{p+1} at the origin: add its h²/12 term
    let h = u.grid().spacing();
    let origin = spectral::origin_value(u).norm().powf(p + 1.0);
    let nl = spectral::radial_moment(u.grid(), |i| u.values()[i].norm().powf(p + 1.0), 1)
        + FOUR_PI * h * h / 12.0 * origin;
    MorawetzReport {
        action: current_moment(u, du, 2),
        rate_lb: -0.5 * params.k * inv_r2
            + params.lambda_f64() * 2.0 * (p - 1.0) / (p + 1.0) * nl,
    }
}

/// Every monitored functional at time `t`, sharing one transform.
pub fn diagnostics_record(u: &Field, params: &PhysParams, t: f64, dt: f64) -> DiagnosticsRecord {
    let spec = to_spectral(u);
    let (du, _) = radial_derivative_from(u, &spec);
    let e = energy_parts(u, &spec, params);
    let v = virial_parts(u, &du, params, &e);
    let m = morawetz_parts(u, &du, params);
    DiagnosticsRecord {
        t,
        mass: e.mass,
        energy: e.energy,
        energy0: e.energy0,
        h1: e.gradient_sq.sqrt(),
        hhalf: hdot_from_coeffs(spec.coeffs(), u.grid(), 0.5).sqrt(),
        y: v.y,
        yprime: v.yprime,
        ysecond_rhs: v.ysecond_rhs,
        action: m.action,
        rate_lb: m.rate_lb,
        l4: lp_integral(u, 4.0),
        sup: u.sup(),
        dt,
    }
}

/// `C(E, M)`: `E` for `K ≤ 0`, `E + 3K²M / (2(3p-7)(p-1))` for `K > 0`.
pub fn threshold_c(energy: f64, mass: f64, params: &PhysParams) -> Result<f64> {
    if params.k <= 0.0 {
        return Ok(energy);
    }
    let p = params.p;
    if p <= P_MASS_CRITICAL + CRITICAL_P_TOL {
        return Err(Error::param(
            "p",
            format!("C(E, M) with K > 0 needs p > 7/3, got {p}"),
        ));
    }
    Ok(energy + 3.0 * params.k * params.k * mass / (2.0 * (3.0 * p - 7.0) * (p - 1.0)))
}

/// Regime labels of the classification table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    GlobalDefocusing,
    GlobalSubthreshold,
    #[serde(rename = "mass_critical_below_MQ")]
    MassCriticalBelowMQ,
    #[serde(rename = "blowup_negative_C")]
    BlowupNegativeC,
    BlowupCase2,
    BlowupCase3,
    EnergyCriticalSubthreshold,
    Undetermined,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::GlobalDefocusing => "global_defocusing",
            Regime::GlobalSubthreshold => "global_subthreshold",
            Regime::MassCriticalBelowMQ => "mass_critical_below_MQ",
            Regime::BlowupNegativeC => "blowup_negative_C",
            Regime::BlowupCase2 => "blowup_case2",
            Regime::BlowupCase3 => "blowup_case3",
            Regime::EnergyCriticalSubthreshold => "energy_critical_subthreshold",
            Regime::Undetermined => "undetermined",
        }
    }

    pub fn is_blowup(self) -> bool {
        matches!(
            self,
            Regime::BlowupNegativeC | Regime::BlowupCase2 | Regime::BlowupCase3
        )
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub regime: Regime,
    pub witnesses: BTreeMap<String, f64>,
}

/// Reference ground states for [`classify_initial_data`].
#[derive(Debug, Clone, Default)]
pub struct References {
    pub q: Option<GroundState>,
    pub w: Option<GroundState>,
}

/// Threshold quantities of a ground state `Q(p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct QThresholds {
    pub mass: f64,
    /// `M(Q)^{1-s_c} E₀(Q)^{s_c}`.
    pub mass_energy: f64,
    /// `‖Q‖₂^{1-s_c} ‖Q‖_{Ḣ¹}^{s_c}`.
    pub mass_gradient: f64,
}

pub(crate) fn q_thresholds(q: &GroundState, p: f64) -> Result<QThresholds> {
    let ProfileKind::Q { p: qp } = q.kind else {
        return Err(Error::MissingReference("reference profile is not Q"));
    };
    if (qp - p).abs() > CRITICAL_P_TOL {
        return Err(Error::MissingReference("Q computed for a different p"));
    }
    let s_c = 1.5 - 2.0 / (p - 1.0);
    let n = &q.norms;
    let mass = n.l2 * n.l2;
    let e0 = 0.5 * n.h1 * n.h1 - n.lp1.powf(p + 1.0) / (p + 1.0);
    Ok(QThresholds {
        mass,
        mass_energy: mass.powf(1.0 - s_c) * e0.max(0.0).powf(s_c),
        mass_gradient: n.l2.powf(1.0 - s_c) * n.h1.powf(s_c),
    })
}

/// Decision table over computed witnesses; only sufficient conditions are
/// asserted, everything else is `undetermined`.
pub fn classify_initial_data(
    u0: &Field,
    params: &PhysParams,
    refs: &References,
) -> Result<Classification> {
    let rec = diagnostics_record(u0, params, 0.0, 0.0);
    let e = energy_report(u0, params);
    let mut w = BTreeMap::new();
    w.insert("mass".to_string(), rec.mass);
    w.insert("energy".to_string(), rec.energy);
    w.insert("h1".to_string(), rec.h1);
    w.insert("y0".to_string(), rec.y);
    w.insert("yprime0".to_string(), rec.yprime);

    let done = |regime, w| Ok(Classification { regime, witnesses: w });
    match params.lambda {
        1 => return done(Regime::GlobalDefocusing, w),
        0 => return done(Regime::Undetermined, w),
        _ => {}
    }
    let p = params.p;
    let tol = CRITICAL_P_TOL;
    let s_c = params.s_c();

    if p > P_MASS_CRITICAL + tol {
        let c = threshold_c(rec.energy, rec.mass, params)?;
        w.insert("C".to_string(), c);
        if c < 0.0 {
            return done(Regime::BlowupNegativeC, w);
        }
        if c == 0.0 && rec.yprime < 0.0 {
            return done(Regime::BlowupCase2, w);
        }
        let lhs = rec.yprime * rec.yprime;
        let rhs = 24.0 * (p - 1.0) * c * rec.y;
        w.insert("case3_lhs".to_string(), lhs);
        w.insert("case3_rhs".to_string(), rhs);
        if c > 0.0 && lhs >= rhs {
            return done(Regime::BlowupCase3, w);
        }
    }

    if p < P_MASS_CRITICAL - tol {
        return done(Regime::GlobalSubthreshold, w);
    }
    if params.is_mass_critical() {
        let q = refs.q.as_ref().ok_or(Error::MissingReference("Q for p = 7/3"))?;
        let t = q_thresholds(q, p)?;
        w.insert("mass_Q".to_string(), t.mass);
        let regime = if rec.mass < t.mass {
            Regime::MassCriticalBelowMQ
        } else {
            Regime::Undetermined
        };
        return done(regime, w);
    }
    if params.is_energy_critical() {
        if params.k < 0.0 {
            let wref = refs.w.as_ref().ok_or(Error::MissingReference("W for p = 5"))?;
            let e0_w = wref.norms.h1 * wref.norms.h1 / 3.0;
            w.insert("energy0_W".to_string(), e0_w);
            w.insert("h1_W".to_string(), wref.norms.h1);
            if rec.energy < e0_w && rec.h1 < wref.norms.h1 {
                return done(Regime::EnergyCriticalSubthreshold, w);
            }
        }
        return done(Regime::Undetermined, w);
    }
    if params.k < 0.0 && p < P_ENERGY_CRITICAL {
        let q = refs
            .q
            .as_ref()
            .ok_or(Error::MissingReference("Q for 7/3 < p < 5"))?;
        let t = q_thresholds(q, p)?;
        let me = rec.mass.powf(1.0 - s_c) * rec.energy.max(0.0).powf(s_c);
        let mg = rec.mass.sqrt().powf(1.0 - s_c) * rec.h1.powf(s_c);
        w.insert("mass_energy".to_string(), me);
        w.insert("mass_energy_Q".to_string(), t.mass_energy);
        w.insert("mass_gradient".to_string(), mg);
        w.insert("mass_gradient_Q".to_string(), t.mass_gradient);
        w.insert("coulomb".to_string(), e.coulomb);
        if rec.energy >= 0.0 && me < t.mass_energy && mg < t.mass_gradient {
            return done(Regime::GlobalSubthreshold, w);
        }
    }
    done(Regime::Undetermined, w)
}

/// Outcome of one of the equivalent gradient conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `‖u‖₂^{1-s_c} ‖u‖_{Ḣ¹}^{s_c} < ‖Q‖₂^{1-s_c} ‖Q‖_{Ḣ¹}^{s_c}`.
pub fn gradient_condition(u: &Field, params: &PhysParams, q: &GroundState) -> Result<ConditionCheck> {
    let t = q_thresholds(q, params.p)?;
    let e = energy_report(u, params);
    let s_c = params.s_c();
    let lhs = e.mass.sqrt().powf(1.0 - s_c) * e.gradient_sq.sqrt().powf(s_c);
    Ok(ConditionCheck {
        lhs,
        rhs: t.mass_gradient,
        holds: lhs < t.mass_gradient,
    })
}

/// The same comparison with `‖u‖²_{Ḣ¹}` replaced by `‖u‖²_{Ḣ¹} - K ∫|u|²/|x|`.
pub fn coulomb_gradient_condition(
    u: &Field,
    params: &PhysParams,
    q: &GroundState,
) -> Result<ConditionCheck> {
    let t = q_thresholds(q, params.p)?;
    let e = energy_report(u, params);
    let s_c = params.s_c();
    let form = e.gradient_sq - params.k * e.coulomb;
    if form < 0.0 {
        return Err(Error::param("K", "quadratic form is negative for this field"));
    }
    let lhs = e.mass.sqrt().powf(1.0 - s_c) * form.powf(0.5 * s_c);
    Ok(ConditionCheck {
        lhs,
        rhs: t.mass_gradient,
        holds: lhs < t.mass_gradient,
    })
}

/// Space-time `L⁴` accumulator and its bound witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionL4 {
    /// Trapezoid of `‖u(t)‖⁴_{L⁴}` over the sample times.
    pub total: f64,
    /// `‖u₀‖₂ · sup_t ‖u(t)‖_{Ḣ^{1/2}}`.
    pub bound_witness: f64,
}

pub fn interaction_l4(series: &TimeSeries) -> Result<InteractionL4> {
    let s = &series.samples;
    let first = s.first().ok_or(Error::EmptySeries)?;
    Ok(InteractionL4 {
        total: trapezoid(s.iter().map(|r| (r.t, r.l4))),
        bound_witness: first.mass.sqrt() * s.iter().map(|r| r.hhalf).fold(0.0, f64::max),
    })
}

/// Running trapezoid of `‖u‖⁴_{L⁴}` at each sample.
pub fn interaction_l4_cumulative(series: &TimeSeries) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(series.samples.len());
    for (i, r) in series.samples.iter().enumerate() {
        if i > 0 {
            let prev = &series.samples[i - 1];
            acc += 0.5 * (r.t - prev.t) * (r.l4 + prev.l4);
        }
        out.push(acc);
    }
    out
}

fn trapezoid(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (t, v) in points {
        if let Some((t0, v0)) = prev {
            acc += 0.5 * (t - t0) * (v + v0);
        }
        prev = Some((t, v));
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalQuantity {
    Mass,
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalAverage {
    pub radius: f64,
    pub quantity: LocalQuantity,
    pub value: f64,
    /// `4K` for the mass, `K³` for the gradient.
    pub bound: f64,
    pub within_bound: bool,
}

/// Time average over the stored snapshots of the mass (or `|∂_r u|²`) in the
/// ball of radius `R`.
pub fn local_time_average(
    series: &TimeSeries,
    radius: f64,
    which: LocalQuantity,
    params: &PhysParams,
) -> Result<LocalAverage> {
    let snaps = &series.snapshots;
    let (t_first, first) = snaps.first().ok_or(Error::EmptySeries)?;
    if radius > first.grid().r_max() {
        return Err(Error::param("R", format!("{radius} exceeds r_max")));
    }
    let local = |u: &Field| -> Result<f64> {
        match which {
            LocalQuantity::Mass => spectral::weighted_integral(u, Weight::Ball(radius)),
            LocalQuantity::Gradient => {
                let du = spectral::radial_derivative(u);
                let h = u.grid().spacing();
                let sum: f64 = du
                    .values()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (*i + 1) as f64 * h <= radius)
                    .map(|(i, d)| ((i + 1) as f64 * h).powi(2) * d.norm_sqr())
                    .sum();
                Ok(FOUR_PI * h * sum)
            }
        }
    };
    let values = snaps
        .iter()
        .map(|(t, u)| local(u).map(|v| (*t, v)))
        .collect::<Result<Vec<_>>>()?;
    let span = snaps.last().map(|(t, _)| t - t_first).unwrap_or(0.0);
    let value = if span > 0.0 {
        trapezoid(values.iter().copied()) / span
    } else {
        local(first)?
    };
    let bound = match which {
        LocalQuantity::Mass => 4.0 * params.k,
        LocalQuantity::Gradient => params.k.powi(3),
    };
    Ok(LocalAverage {
        radius,
        quantity: which,
        value,
        bound,
        within_bound: value <= bound,
    })
}

/// Worst relative mismatch between finite differences of the sampled `y` and
/// the recorded `y'` and `y''` right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialConsistency {
    /// `max |D₁y - y'| / max(|y'|, 4 √(y M))`.
    pub first: f64,
    /// `max |D₂y - rhs| / max(|rhs|, 8 ‖u‖²_{Ḣ¹})`.
    pub second: f64,
    /// Interior samples compared.
    pub points: usize,
}

/// Three-point differences on every `decimate`-th sample (non-uniform spacing
/// allowed). The scales in the denominators are the sizes of the largest
/// terms, so stationary runs with `y'' ≈ 0` are compared meaningfully.
pub fn virial_consistency(samples: &[DiagnosticsRecord], decimate: usize) -> Result<VirialConsistency> {
    let s: Vec<&DiagnosticsRecord> = samples.iter().step_by(decimate.max(1)).collect();
    if s.len() < 3 {
        return Err(Error::EmptySeries);
    }
    let mut out = VirialConsistency {
        first: 0.0,
        second: 0.0,
        points: s.len() - 2,
    };
    for w in s.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let (h1, h2) = (b.t - a.t, c.t - b.t);
        let d2 = 2.0 * ((c.y - b.y) / h2 - (b.y - a.y) / h1) / (h1 + h2);
        let d1 = -h2 / (h1 * (h1 + h2)) * a.y
            + (h2 - h1) / (h1 * h2) * b.y
            + h1 / (h2 * (h1 + h2)) * c.y;
        let s2 = b.ysecond_rhs.abs().max(8.0 * b.h1 * b.h1);
        let s1 = b.yprime.abs().max(4.0 * (b.y * b.mass).sqrt());
        out.second = out.second.max((d2 - b.ysecond_rhs).abs() / s2);
        out.first = out.first.max((d1 - b.yprime).abs() / s1);
    }
    Ok(out)
}

/// Monotonicity of the Morawetz action over consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorawetzCheck {
    /// Smallest `A(t_{i+1}) - A(t_i)`.
    pub min_increment: f64,
    /// Smallest `ΔA/Δt - (rate_lb_i + rate_lb_{i+1})/2 + 1e-3 max|A|`.
    pub min_rate_slack: f64,
    pub max_abs_action: f64,
}

pub fn morawetz_check(samples: &[DiagnosticsRecord]) -> Result<MorawetzCheck> {
    if samples.len() < 2 {
        return Err(Error::EmptySeries);
    }
    let max_abs_action = samples.iter().map(|r| r.action.abs()).fold(0.0, f64::max);
    let mut out = MorawetzCheck {
        min_increment: f64::INFINITY,
        min_rate_slack: f64::INFINITY,
        max_abs_action,
    };
    for w in samples.windows(2) {
        let da = w[1].action - w[0].action;
        let rate = da / (w[1].t - w[0].t);
        out.min_increment = out.min_increment.min(da);
        out.min_rate_slack = out
            .min_rate_slack
            .min(rate - 0.5 * (w[0].rate_lb + w[1].rate_lb) + 1e-3 * max_abs_action);
    }
    Ok(out)
}
