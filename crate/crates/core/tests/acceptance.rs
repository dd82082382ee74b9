//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Criteria listed in
//! `KNOWN_FAILURES` print FAIL with the reason but do not fail the process;
//! any other failure does.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coulomb_nls::diagnostics::{
    classify_initial_data, coulomb_gradient_condition, diagnostics_record, energy_report, gradient_condition,
    interaction_l4, interaction_l4_cumulative, local_time_average, morawetz_check, threshold_c, virial_consistency,
    LocalQuantity, References, Regime,
};
use coulomb_nls::evolution::{evolve, oracle_order, EvolveConfig, InitialData, Status, TimeSeries};
use coulomb_nls::field::Field;
use coulomb_nls::grid::RadialGrid;
use coulomb_nls::ground_states::{
    constants_report, explicit_w, shoot_ground_state, w_residual, GroundState, ShootKind, SHOOT_TOL,
};
use coulomb_nls::params::PhysParams;
use coulomb_nls::spectral::lp_norm;

/// 6: no positive soliton exists at K = 2. 8: `3e^{-r²}` has positive energy.
const KNOWN_FAILURES: &[usize] = &[6, 8];

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }

    fn note(mut self, line: impl Into<String>) -> Self {
        self.notes.push(line.into());
        self
    }
}

fn l2(f: &Field) -> f64 {
    lp_norm(f, 2.0).unwrap()
}

fn params(k: f64, lambda: i8, p: f64) -> PhysParams {
    PhysParams::new(k, lambda, p).unwrap()
}

fn grid(r_max: f64, n: usize) -> RadialGrid {
    RadialGrid::new(r_max, n).unwrap()
}

fn gaussian(amplitude: f64) -> InitialData {
    InitialData::Gaussian {
        amplitude,
        width: 1.0,
    }
}

fn run(cfg: EvolveConfig) -> TimeSeries {
    evolve(&cfg).expect("evolution failed")
}

// Shared runs -------------------------------------------------------------

/// K = 2, λ = 0, u₀ = e^{-r}, sampled every 0.01.
fn bound_state_run() -> &'static TimeSeries {
    static RUN: OnceLock<TimeSeries> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut cfg = EvolveConfig::new(
            params(2.0, 0, 3.0),
            grid(30.0, 4096),
            InitialData::BoundState { amplitude: 1.0 },
            1e-3,
            1.0,
        );
        cfg.sample_stride = 10;
        run(cfg)
    })
}

fn defocusing_cfg(dt: f64, stride: usize) -> EvolveConfig {
    let mut cfg = EvolveConfig::new(params(-1.0, 1, 3.0), grid(40.0, 1024), gaussian(1.0), dt, 1.0);
    cfg.sample_stride = stride;
    cfg
}

fn defocusing_run() -> &'static TimeSeries {
    static RUN: OnceLock<TimeSeries> = OnceLock::new();
    RUN.get_or_init(|| run(defocusing_cfg(1e-3, 10)))
}

/// Soliton run at K = 3 (the smallest integer coupling where one exists).
fn soliton_run() -> &'static TimeSeries {
    static RUN: OnceLock<TimeSeries> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut cfg = EvolveConfig::new(params(3.0, 1, 3.0), grid(30.0, 2048), InitialData::Soliton, 5e-4, 10.0);
        cfg.sample_stride = 20;
        cfg.snapshot_stride = Some(20);
        run(cfg)
    })
}

fn blowup_cfg(k: f64, amplitude: f64, r_max: f64, n: usize) -> EvolveConfig {
    let mut cfg = EvolveConfig::new(params(k, -1, 3.0), grid(r_max, n), gaussian(amplitude), 1e-3, 5.0);
    cfg.adaptive = true;
    cfg.sample_stride = 4;
    cfg
}

/// K = 0, λ = -1, u₀ = 3e^{-r²}.
fn blowup_run() -> &'static TimeSeries {
    static RUN: OnceLock<TimeSeries> = OnceLock::new();
    RUN.get_or_init(|| run(blowup_cfg(0.0, 3.0, 15.0, 8192)))
}

/// K = -1, λ = 1 Gaussian on a domain large enough that nothing returns from
/// the wall before `t_max`.
fn morawetz_run(r_max: f64, n: usize, t_max: f64) -> TimeSeries {
    run(EvolveConfig::new(params(-1.0, 1, 3.0), grid(r_max, n), gaussian(1.0), 1e-2, t_max))
}

// Closed-form Gaussian integrals for u = A e^{-r²}, p = 3, λ = -1.

fn gaussian_energy(a: f64, k: f64) -> f64 {
    let mass = a * a * (PI / 2.0).powf(1.5);
    let grad = 3.0 * mass;
    let l4 = a.powi(4) * (PI / 4.0).powf(1.5);
    let coulomb = PI * a * a;
    0.5 * grad - 0.5 * k * coulomb - 0.25 * l4
}

// Criteria ----------------------------------------------------------------

fn c1() -> Outcome {
    let ts = bound_state_run();
    let u0 = &ts.initial_field;
    // c_K = K/2 = 1
    let exact = u0.scale(Complex64::from_polar(1.0, ts.final_time));
    let err = l2(&ts.final_field.sub(&exact).unwrap()) / l2(u0);
    let drift = l2(&ts.final_field.abs().sub(&u0.abs()).unwrap());
    Outcome::new(
        err < 1e-5 && drift < 1e-6 && (ts.final_time - 1.0).abs() < 1e-12,
        format!("t = {}, relative L2 error {err:.2e} (< 1e-5), |u| profile drift {drift:.2e} (< 1e-6)", ts.final_time),
    )
}

fn c2() -> Outcome {
    let a = defocusing_run();
    let b = run(defocusing_cfg(5e-4, 20));
    let (m, e1, e2) = (a.mass_drift(), a.energy_drift(), b.energy_drift());
    let ratio = e1 / e2;
    Outcome::new(
        m < 1e-10 && b.mass_drift() < 1e-10 && e1 < 1e-6 && ratio >= 3.0,
        format!("mass drift {m:.2e}, energy drift {e1:.2e} at dt = 1e-3 and {e2:.2e} at dt = 5e-4 (ratio {ratio:.2})"),
    )
}

fn c3() -> Outcome {
    let p = params(-1.0, 1, 3.0);
    let g = grid(20.0, 128);
    let u0 = gaussian(1.0).build(&g, &p).unwrap();
    let o = oracle_order(&u0, &p, 0.1, 4e-3).unwrap();
    Outcome::new(
        (1.7..=2.3).contains(&o.richardson_order),
        format!(
            "dt {:?}: discrepancies {:.3e} {:.3e} {:.3e}, measured order {:.3}",
            o.dts, o.discrepancies[0], o.discrepancies[1], o.discrepancies[2], o.richardson_order
        ),
    )
    .note(format!(
        "ratio of raw discrepancies gives {:.2} {:.2}; they sit on a common spatial floor, so the order is read from successive differences",
        o.plain_orders[0], o.plain_orders[1]
    ))
}

fn c4() -> Outcome {
    let g = grid(30.0, 2048);
    let mut pass = true;
    let mut lines = Vec::new();
    for p in [2.5, 3.0, 7.0 / 3.0, 3.5] {
        let q = shoot_ground_state(ShootKind::Q { p }, &g, SHOOT_TOL).unwrap();
        let r = constants_report(&q, p).unwrap();
        let n = q.norms;
        let (h1sq, mass, lp) = (n.h1 * n.h1, n.l2 * n.l2, n.lp1.powf(p + 1.0));
        // Independent: Nehari and Pohozaev identities from the norms.
        let nehari = (h1sq + mass - lp).abs() / lp;
        let pohozaev = (0.5 * h1sq + 1.5 * mass - 3.0 * lp / (p + 1.0)).abs() / lp;
        let worst = r
            .identity_qah1_residual
            .max(r.energy_identity_residuals[0])
            .max(r.energy_identity_residuals[1])
            .max(nehari)
            .max(pohozaev);
        let mut ok = worst < 1e-5;
        let mut extra = String::new();
        if (p - 7.0 / 3.0).abs() < 1e-12 {
            let e = r.e0_q.abs() / h1sq;
            ok &= e < 1e-5;
            extra = format!(", |E0(Q)|/|Q|^2_H1 {e:.1e}");
        }
        if p == 3.0 {
            let e = (r.e0_q / r.mass_q - 0.5).abs();
            ok &= e < 1e-5;
            extra = format!(", |E0/M - 1/2| {e:.1e}");
        }
        pass &= ok;
        lines.push(format!("p = {p:.4}: worst identity residual {worst:.1e}{extra}"));
    }
    Outcome::new(pass, lines.join("; "))
}

fn c5() -> Outcome {
    let g = grid(30.0, 4096);
    let r1 = g.nodes()[0];
    let sup = g
        .nodes()
        .into_iter()
        .filter(|&r| r <= 10.0)
        .map(w_residual)
        .fold(0.0, f64::max);
    let w = explicit_w(&g);
    let profile_err = g
        .nodes()
        .iter()
        .zip(w.profile.values())
        .map(|(&r, v)| (v.re - (1.0 + r * r / 3.0).powf(-0.5)).abs())
        .fold(0.0, f64::max);
    Outcome::new(
        sup < 1e-10 && profile_err < 1e-14,
        format!("sup residual on [{r1:.2e}, 10] is {sup:.2e}; profile vs (1 + r^2/3)^(-1/2) {profile_err:.1e}"),
    )
}

fn c6() -> Outcome {
    let at_two = shoot_ground_state(ShootKind::F { k: 2.0, p: 3.0 }, &grid(30.0, 2048), SHOOT_TOL);
    let detail = match &at_two {
        Ok(f) => format!("unexpectedly found a K = 2 soliton, amplitude {}", f.amplitude),
        Err(e) => format!(
            "K = 2: {e}; testing the soliton equation against f and using the sharp hydrogen bound gives 0 >= (1 - K^2/4)|f|^2 + |f|_4^4, so none exists for K <= 2"
        ),
    };
    let ts = soliton_run();
    let f = ts.initial_field.abs();
    let dev = ts
        .snapshots
        .iter()
        .map(|(_, u)| l2(&u.abs().sub(&f).unwrap()))
        .fold(0.0, f64::max);
    let cum = interaction_l4_cumulative(ts);
    let half = ts.samples.iter().position(|r| r.t >= 0.5 * ts.final_time - 1e-9).unwrap();
    let ratio = cum[cum.len() - 1] / cum[half];
    let supplement_ok = dev < 1e-4 && (ratio - 2.0).abs() < 0.05 && ts.status == Status::Completed;
    Outcome::new(at_two.is_ok() && supplement_ok, detail).note(format!(
        "K = 3 substitute ({}): max L2 deviation of |u| from |f| {dev:.2e} over [0, {}], L4 accumulator {:.3} at T/2 and {:.3} at T (ratio {ratio:.4})",
        if supplement_ok { "passes" } else { "fails" },
        ts.final_time,
        cum[half],
        cum[cum.len() - 1]
    ))
}

fn c7() -> Outcome {
    let runs: [(&str, &TimeSeries); 4] = [
        ("run 1", bound_state_run()),
        ("run 2", defocusing_run()),
        ("run 6 (K = 3)", soliton_run()),
        ("blow-up", blowup_run()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, ts) in runs {
        let v = virial_consistency(&ts.samples, 1).unwrap();
        pass &= v.first < 1e-3 && v.second < 1e-3;
        parts.push(format!("{name}: y' {:.1e}, y'' {:.1e}", v.first, v.second));
    }
    Outcome::new(pass, parts.join("; "))
}

/// Blow-up status and the quadratic upper bound on `y`.
fn blowup_checks(ts: &TimeSeries, p: &PhysParams) -> (bool, f64, f64) {
    let s0 = ts.samples[0];
    let c = threshold_c(s0.energy, s0.mass, p).unwrap();
    let excess = ts
        .samples
        .iter()
        .map(|r| r.y - (6.0 * (p.p - 1.0) * c * r.t * r.t + s0.yprime * r.t + s0.y + 1e-3 * s0.y))
        .fold(f64::NEG_INFINITY, f64::max);
    (ts.status == Status::BlowupDetected && excess <= 0.0, c, excess)
}

fn c8() -> Outcome {
    let p0 = params(0.0, -1, 3.0);
    let e_closed = gaussian_energy(3.0, 0.0);
    let ts = blowup_run();
    let e_num = ts.samples[0].energy;
    let (ok0, _, excess0) = blowup_checks(ts, &p0);

    // K = 2: raise the amplitude in steps of 1/4 until C(E, M) < 0.
    let p2 = params(2.0, -1, 3.0);
    let g2 = grid(15.0, 2048);
    let mut a = 3.0;
    let c2 = loop {
        let u = gaussian(a).build(&g2, &p2).unwrap();
        let r = diagnostics_record(&u, &p2, 0.0, 0.0);
        let c = threshold_c(r.energy, r.mass, &p2).unwrap();
        if c < 0.0 {
            break c;
        }
        a += 0.25;
    };
    let mut cfg = blowup_cfg(2.0, a, 15.0, 2048);
    cfg.grid = g2;
    let ts2 = run(cfg);
    let (ok2, _, excess2) = blowup_checks(&ts2, &p2);

    // Amplitude with E < 0 at K = 0.
    let ts3 = run(blowup_cfg(0.0, 4.5, 15.0, 2048));
    let (ok3, _, excess3) = blowup_checks(&ts3, &p0);
    let e3 = gaussian_energy(4.5, 0.0);

    let energy_agrees = (e_num - e_closed).abs() < 1e-6 * e_closed.abs();
    Outcome::new(
        e_closed < 0.0 && energy_agrees && ok0 && ok2,
        format!(
            "A = 3, K = 0: E = {e_closed:.4} by closed form ({e_num:.4} numerically), so E < 0 is false; status {} at t = {:.4}, y-bound excess {excess0:.2e}",
            ts.status.label(),
            ts.final_time
        ),
    )
    .note(format!(
        "K = 2: C < 0 first at A = {a} (C = {c2:.3}); status {} at t = {:.4}, y-bound excess {excess2:.2e} ({})",
        ts2.status.label(),
        ts2.final_time,
        if ok2 { "passes" } else { "fails" }
    ))
    .note(format!(
        "A = 4.5, K = 0 (E = {e3:.3} < 0 by closed form): status {} at t = {:.4}, y-bound excess {excess3:.2e} ({})",
        ts3.status.label(),
        ts3.final_time,
        if ok3 && e3 < 0.0 { "passes" } else { "fails" }
    ))
}

fn c9() -> Outcome {
    let ts = morawetz_run(400.0, 4096, 20.0);
    let m = morawetz_check(&ts.samples).unwrap();
    Outcome::new(
        m.min_increment >= -1e-8 && m.min_rate_slack >= 0.0,
        format!(
            "{} samples to t = {}: smallest increment of A {:.2e}, smallest rate slack {:.2e}",
            ts.samples.len(),
            ts.final_time,
            m.min_increment,
            m.min_rate_slack
        ),
    )
}

fn c10() -> Outcome {
    let ts = morawetz_run(800.0, 8192, 50.0);
    let b = interaction_l4(&ts).unwrap();
    let cum = interaction_l4_cumulative(&ts);
    let i80 = ts.samples.iter().position(|r| r.t >= 0.8 * ts.final_time - 1e-9).unwrap();
    let inc = (b.total - cum[i80]) / b.total;
    Outcome::new(
        inc < 0.02 && b.total <= 10.0 * b.bound_witness,
        format!(
            "t = {}: L4 total {:.4}, final-20% share {inc:.1e} (< 2e-2), bound 10 x {:.3} = {:.3}",
            ts.final_time,
            b.total,
            b.bound_witness,
            10.0 * b.bound_witness
        ),
    )
}

fn q3(g: &RadialGrid) -> GroundState {
    shoot_ground_state(ShootKind::Q { p: 3.0 }, g, SHOOT_TOL).unwrap()
}

fn c11() -> Outcome {
    let p = params(-1.0, -1, 3.0);
    let g = grid(40.0, 1024);
    let q = q3(&g);
    let refs = References {
        q: Some(q.clone()),
        w: None,
    };
    let u0 = InitialData::GroundState { scale: 0.5 }.build(&g, &p).unwrap();
    let cls = classify_initial_data(&u0, &p, &refs).unwrap();
    let w = &cls.witnesses;
    let start_ok = w["mass_energy"] < w["mass_energy_Q"] && w["mass_gradient"] < w["mass_gradient_Q"];
    let mut cfg = EvolveConfig::new(p, g, InitialData::GroundState { scale: 0.5 }, 1e-3, 10.0);
    cfg.sample_stride = 10;
    let ts = run(cfg);
    let threshold = q.norms.l2.sqrt() * q.norms.h1.sqrt();
    let worst = ts
        .samples
        .iter()
        .map(|r| r.mass.powf(0.25) * r.h1.sqrt())
        .fold(0.0, f64::max);
    Outcome::new(
        start_ok && cls.regime == Regime::GlobalSubthreshold && worst < threshold && ts.status == Status::Completed,
        format!(
            "t = 0 witnesses {:.3} < {:.3} and {:.3} < {:.3} ({}); max trapped quantity {worst:.4} < {threshold:.4} over {} samples to t = {}",
            w["mass_energy"],
            w["mass_energy_Q"],
            w["mass_gradient"],
            w["mass_gradient_Q"],
            cls.regime,
            ts.samples.len(),
            ts.final_time
        ),
    )
}

fn c12() -> Outcome {
    let p = params(-1.0, -1, 3.0);
    let g = grid(30.0, 1024);
    let q = q3(&g);
    let limit = 0.9 * q.norms.l2.powi(2) * (0.5 * q.norms.h1.powi(2) - 0.25 * q.norms.lp1.powi(4));
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut accepted, mut rejected, mut agree, mut both_hold) = (0, 0, 0, 0);
    while accepted < 100 {
        let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=3))
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.4..3.0), rng.gen_range(0.0..4.0)))
            .collect();
        let chirp = rng.gen_range(-0.5..0.5);
        let shape = Field::from_fn(g, |r| {
            let v: f64 = bumps.iter().map(|(a, w, c)| a * (-((r - c) / w).powi(2)).exp()).sum();
            Complex64::from_polar(v, chirp * r * r)
        });
        let scale = rng.gen_range(0.05f64..3.0) * (q.norms.l2 / l2(&shape));
        let u = shape.scale(Complex64::new(scale, 0.0));
        let e = energy_report(&u, &p);
        if e.mass * e.energy > limit {
            rejected += 1;
            continue;
        }
        accepted += 1;
        let weak = gradient_condition(&u, &p, &q).unwrap().holds;
        let strong = coulomb_gradient_condition(&u, &p, &q).unwrap().holds;
        agree += usize::from(weak == strong);
        both_hold += usize::from(weak && strong);
    }
    Outcome::new(
        agree == accepted,
        format!(
            "{agree} of {accepted} admissible fields agree ({both_hold} satisfy both, {} neither; {rejected} draws rejected)",
            agree - both_hold
        ),
    )
}

fn c13() -> Outcome {
    let p = params(2.0, 0, 3.0);
    let mut cfg = EvolveConfig::new(p, grid(30.0, 1024), InitialData::BoundState { amplitude: 1.0 }, 1e-2, 10.0);
    cfg.snapshot_stride = Some(10);
    let ts = run(cfg);
    let avg = local_time_average(&ts, 10.0, LocalQuantity::Mass, &p).unwrap();
    Outcome::new(
        avg.within_bound && (avg.value - PI).abs() < 1e-3,
        format!(
            "time-averaged mass in r < 10 over [0, {}]: {:.6} (closed form {:.6}) <= 4K = {}",
            ts.final_time, avg.value, PI, avg.bound
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("linear bound state", c1),
        ("conservation", c2),
        ("oracle order", c3),
        ("ground-state identities", c4),
        ("W residual", c5),
        ("soliton", c6),
        ("virial identity", c7),
        ("blow-up", c8),
        ("Morawetz monotonicity", c9),
        ("interaction Morawetz", c10),
        ("sub-threshold trap", c11),
        ("condition equivalence", c12),
        ("local mass average", c13),
    ];
    let mut passed = 0;
    let mut unexpected = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {id:>2} {name}: {} ({secs:.1}s)", o.detail);
        for n in &o.notes {
            println!("        {n}");
        }
        if o.pass {
            passed += 1;
        } else if !KNOWN_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("{passed} of {} criteria passed", criteria.len());
    let known: Vec<_> = KNOWN_FAILURES.iter().map(|k| k.to_string()).collect();
    println!("known failures: {}", known.join(", "));
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
