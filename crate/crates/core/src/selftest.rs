//! Desk-scale invariant suite. Every check is small enough that the whole
//! suite finishes in well under a minute on one core.

use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::parse_config;
use crate::diagnostics::{
    classify_initial_data, morawetz_check, virial_consistency, References, Regime,
};
use crate::error::Result;
use crate::evolution::{
    evolve, free_gaussian, oracle_order, strang_step, EvolveConfig, InitialData, Mutation, Status,
};
use crate::field::Field;
use crate::grid::RadialGrid;
use crate::ground_states::{constants_report, explicit_w, shoot_ground_state, ShootKind, SHOOT_TOL};
use crate::params::PhysParams;
use crate::runner::series_csv;
use crate::spectral::{from_spectral, lp_norm, to_spectral};

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    /// Worker threads; results are reported in a fixed order regardless.
    pub jobs: usize,
    /// Defect injected into every evolution-based check.
    pub mutation: Option<Mutation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub results: Vec<InvariantResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &InvariantResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            let tag = if r.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<26} {} ({:.2}s)", r.name, r.detail, r.seconds)?;
        }
        let failed = self.failed().count();
        write!(
            f,
            "{} of {} invariants passed",
            self.results.len() - failed,
            self.results.len()
        )
    }
}

type Check = fn(Option<Mutation>) -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 16] = [
    ("spectral_round_trip", spectral_round_trip),
    ("parseval", parseval),
    ("mass_conservation", mass_conservation),
    ("energy_conservation", energy_conservation),
    ("time_reversal", time_reversal),
    ("bound_state_phase", bound_state_phase),
    ("free_gaussian", free_gaussian_check),
    ("oracle_order", oracle_order_check),
    ("q_identities", q_identities),
    ("w_residual", w_residual),
    ("virial_identity", virial_identity),
    ("morawetz_monotone", morawetz_monotone),
    ("blowup_detection", blowup_detection),
    ("classify_small_data", classify_small_data),
    ("config_strictness", config_strictness),
    ("csv_determinism", csv_determinism),
];

/// Names of the invariants, in report order.
pub fn invariant_names() -> impl Iterator<Item = &'static str> {
    CHECKS.iter().map(|(n, _)| *n)
}

pub fn run_selftest(opts: &SelftestOptions) -> SelftestReport {
    let jobs = opts.jobs.clamp(1, CHECKS.len());
    let mut slots: Vec<Option<InvariantResult>> = vec![None; CHECKS.len()];
    let next = std::sync::atomic::AtomicUsize::new(0);
    let run_one = |i: usize| {
        let (name, check) = CHECKS[i];
        let start = Instant::now();
        let (passed, detail) = match check(opts.mutation) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        InvariantResult {
            name,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    };
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if i >= CHECKS.len() {
                            break done;
                        }
                        done.push((i, run_one(i)));
                    }
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("selftest worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    SelftestReport {
        results: slots.into_iter().map(|r| r.expect("every check ran")).collect(),
    }
}

fn verdict(ok: bool, detail: String) -> Result<(bool, String)> {
    Ok((ok, detail))
}

fn l2(f: &Field) -> Result<f64> {
    lp_norm(f, 2.0)
}

fn wavy(grid: RadialGrid) -> Field {
    Field::from_fn(grid, |r| {
        Complex64::new((-r * r).exp() * (1.0 + 0.3 * (3.0 * r).cos()), 0.2 * (-r).exp() * r)
    })
}

fn defocusing() -> PhysParams {
    PhysParams::new(-1.0, 1, 3.0).expect("valid")
}

fn spectral_round_trip(_: Option<Mutation>) -> Result<(bool, String)> {
    let u = wavy(RadialGrid::new(10.0, 257)?);
    let back = from_spectral(&to_spectral(&u));
    let err = l2(&back.sub(&u)?)? / l2(&u)?;
    verdict(err < 1e-13, format!("relative error {err:.2e}"))
}

fn parseval(_: Option<Mutation>) -> Result<(bool, String)> {
    let grid = RadialGrid::new(10.0, 300)?;
    let u = wavy(grid);
    let spec = to_spectral(&u);
    let l = grid.r_max();
    let modal: f64 = 4.0 * std::f64::consts::PI * 0.5 * l * spec.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
    let nodal = l2(&u)?.powi(2);
    let err = (modal - nodal).abs() / nodal;
    verdict(err < 1e-12, format!("relative mismatch {err:.2e}"))
}

fn mass_conservation(_: Option<Mutation>) -> Result<(bool, String)> {
    let grid = RadialGrid::new(20.0, 256)?;
    let params = defocusing();
    let mut u = InitialData::Gaussian { amplitude: 1.0, width: 1.0 }.build(&grid, &params)?;
    let m0 = l2(&u)?;
    for _ in 0..100 {
        u = strang_step(&u, 1e-3, &params)?;
    }
    let drift = (l2(&u)? / m0 - 1.0).abs();
    verdict(drift < 1e-12, format!("relative drift {drift:.2e} after 100 steps"))
}

fn energy_conservation(m: Option<Mutation>) -> Result<(bool, String)> {
    let grid = RadialGrid::new(20.0, 256)?;
    let mut cfg = EvolveConfig::new(
        defocusing(),
        grid,
        InitialData::Gaussian { amplitude: 1.0, width: 1.0 },
        1e-3,
        0.2,
    );
    cfg.mutation = m;
    let ts = evolve(&cfg)?;
    let drift = ts.energy_drift();
    verdict(drift < 1e-6, format!("relative energy drift {drift:.2e} over t = 0.2"))
}

fn time_reversal(_: Option<Mutation>) -> Result<(bool, String)> {
    let grid = RadialGrid::new(20.0, 256)?;
    let params = defocusing();
    let u0 = InitialData::Gaussian { amplitude: 1.0, width: 1.0 }.build(&grid, &params)?;
    let mut u = u0.clone();
    for _ in 0..50 {
        u = strang_step(&u, 1e-3, &params)?;
    }
    u = u.conj();
    for _ in 0..50 {
        u = strang_step(&u, 1e-3, &params)?;
    }
    let err = l2(&u.conj().sub(&u0)?)?;
    verdict(err < 1e-8, format!("L2 error {err:.2e}"))
}

fn bound_state_phase(m: Option<Mutation>) -> Result<(bool, String)> {
    let params = PhysParams::new(2.0, 0, 3.0)?;
    let grid = RadialGrid::new(30.0, 512)?;
    let mut cfg = EvolveConfig::new(params, grid, InitialData::BoundState { amplitude: 1.0 }, 1e-2, 0.5);
    cfg.mutation = m;
    let ts = evolve(&cfg)?;
    let exact = ts.initial_field.scale(Complex64::from_polar(1.0, ts.final_time));
    let err = l2(&ts.final_field.sub(&exact)?)? / l2(&exact)?;
    verdict(err < 1e-4, format!("relative error {err:.2e} at t = {}", ts.final_time))
}

fn free_gaussian_check(m: Option<Mutation>) -> Result<(bool, String)> {
    let params = PhysParams::new(0.0, 0, 3.0)?;
    let grid = RadialGrid::new(40.0, 1024)?;
    let mut cfg = EvolveConfig::new(params, grid, InitialData::Gaussian { amplitude: 1.0, width: 1.0 }, 1e-2, 1.0);
    cfg.mutation = m;
    let ts = evolve(&cfg)?;
    let err = l2(&ts.final_field.sub(&free_gaussian(&grid, ts.final_time))?)?;
    verdict(err < 1e-5, format!("L2 error {err:.2e} at t = 1"))
}

fn oracle_order_check(_: Option<Mutation>) -> Result<(bool, String)> {
    let grid = RadialGrid::new(20.0, 128)?;
    let params = defocusing();
    let u0 = InitialData::Gaussian { amplitude: 1.0, width: 1.0 }.build(&grid, &params)?;
    let o = oracle_order(&u0, &params, 0.1, 4e-3)?;
    let ok = (1.7..=2.3).contains(&o.richardson_order);
    verdict(ok, format!("Strang vs CN order {:.3}", o.richardson_order))
}

fn q_identities(_: Option<Mutation>) -> Result<(bool, String)> {
    let grid = RadialGrid::new(30.0, 1024)?;
    let q = shoot_ground_state(ShootKind::Q { p: 3.0 }, &grid, SHOOT_TOL)?;
    let c = constants_report(&q, 3.0)?;
    let worst = c
        .energy_identity_residuals
        .iter()
        .fold(c.identity_qah1_residual.abs(), |a, b| a.max(b.abs()));
    let ratio = c.e0_q / c.mass_q;
    let ok = worst < 1e-5 && (ratio - 0.5).abs() < 1e-5;
    verdict(ok, format!("identity residual {worst:.2e}, E0/M = {ratio:.8}"))
}

fn w_residual(_: Option<Mutation>) -> Result<(bool, String)> {
    let w = explicit_w(&RadialGrid::new(10.0, 1000)?);
    verdict(w.residual < 1e-10, format!("sup residual {:.2e}", w.residual))
}

fn virial_identity(m: Option<Mutation>) -> Result<(bool, String)> {
    let grid = RadialGrid::new(40.0, 512)?;
    let mut cfg = EvolveConfig::new(
        defocusing(),
        grid,
        InitialData::Gaussian { amplitude: 1.0, width: 1.0 },
        1e-3,
        0.3,
    );
    cfg.sample_stride = 10;
    cfg.mutation = m;
    let v = virial_consistency(&evolve(&cfg)?.samples, 1)?;
    verdict(
        v.first < 1e-3 && v.second < 1e-3,
        format!("y' mismatch {:.2e}, y'' mismatch {:.2e}", v.first, v.second),
    )
}

fn morawetz_monotone(m: Option<Mutation>) -> Result<(bool, String)> {
    let grid = RadialGrid::new(100.0, 1024)?;
    let mut cfg = EvolveConfig::new(
        defocusing(),
        grid,
        InitialData::Gaussian { amplitude: 1.0, width: 1.0 },
        1e-2,
        4.0,
    );
    cfg.mutation = m;
    let c = morawetz_check(&evolve(&cfg)?.samples)?;
    verdict(
        c.min_increment >= -1e-8 && c.min_rate_slack >= 0.0,
        format!("min dA {:.2e}, min rate slack {:.2e}", c.min_increment, c.min_rate_slack),
    )
}

fn blowup_detection(m: Option<Mutation>) -> Result<(bool, String)> {
    let params = PhysParams::new(0.0, -1, 3.0)?;
    let grid = RadialGrid::new(15.0, 2048)?;
    let mut cfg = EvolveConfig::new(params, grid, InitialData::Gaussian { amplitude: 4.5, width: 1.0 }, 1e-3, 1.0);
    cfg.adaptive = true;
    cfg.mutation = m;
    let ts = evolve(&cfg)?;
    let tail = &ts.samples[ts.samples.len().saturating_sub(10)..];
    let rising = tail.windows(2).all(|w| w[1].h1 > w[0].h1);
    verdict(
        ts.status == Status::BlowupDetected && rising,
        format!("status {} at t = {:.5}", ts.status.label(), ts.final_time),
    )
}

fn classify_small_data(_: Option<Mutation>) -> Result<(bool, String)> {
    let params = PhysParams::new(-1.0, -1, 3.0)?;
    let grid = RadialGrid::new(30.0, 1024)?;
    let refs = References {
        q: Some(shoot_ground_state(ShootKind::Q { p: 3.0 }, &grid, SHOOT_TOL)?),
        w: None,
    };
    let u0 = InitialData::Gaussian { amplitude: 0.01, width: 1.0 }.build(&grid, &params)?;
    let c = classify_initial_data(&u0, &params, &refs)?;
    verdict(c.regime == Regime::GlobalSubthreshold, format!("regime {}", c.regime))
}

fn config_strictness(_: Option<Mutation>) -> Result<(bool, String)> {
    let base = "[physics]\nK = 2\nlambda = 0\np = 3\n[grid]\nrmax = 30\nn = 64\n[time]\ndt = 1e-3\ntmax = 1\n[initial]\nkind = \"bound_state\"\n";
    let ok_base = parse_config(base).is_ok();
    let typo = parse_config(&base.replace("tmax", "t_max"))
        .map_err(|e| e.to_string())
        .err()
        .is_some_and(|m| m.contains("time.t_max"));
    let lambda = parse_config(&base.replace("lambda = 0", "lambda = 2"))
        .map_err(|e| e.to_string())
        .err()
        .is_some_and(|m| m.contains("lambda") && m.contains("{-1, 0, 1}"));
    verdict(
        ok_base && typo && lambda,
        format!("valid accepted: {ok_base}, typo rejected: {typo}, lambda rejected: {lambda}"),
    )
}

fn csv_determinism(m: Option<Mutation>) -> Result<(bool, String)> {
    let grid = RadialGrid::new(20.0, 256)?;
    let mut cfg = EvolveConfig::new(
        defocusing(),
        grid,
        InitialData::Gaussian { amplitude: 1.0, width: 1.0 },
        1e-3,
        0.05,
    );
    cfg.mutation = m;
    let a = series_csv(&evolve(&cfg)?.samples);
    let b = series_csv(&evolve(&cfg)?.samples);
    verdict(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = invariant_names().collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
    }

    #[test]
    fn cheap_checks_pass() {
        for check in [spectral_round_trip, parseval, mass_conservation, time_reversal, config_strictness] {
            let (ok, detail) = check(None).unwrap();
            assert!(ok, "{detail}");
        }
    }

    #[test]
    fn sign_flip_breaks_energy_conservation() {
        let (ok, _) = energy_conservation(None).unwrap();
        assert!(ok);
        let (ok, detail) = energy_conservation(Some(Mutation::FlipCoulombSign)).unwrap();
        assert!(!ok, "{detail}");
    }
}
