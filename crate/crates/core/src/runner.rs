//! Run orchestration: builds an evolution from a [`SimConfig`], writes
//! `series.csv`, `final_field.csv` and `summary.json`, and holds the catalog of
//! named scenarios.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::config::{parse_config, Format, GridSpec, InitialSpec, OutputSpec, SimConfig, TimeSpec};
use crate::diagnostics::{
    classify_initial_data, interaction_l4, local_time_average, Classification, DiagnosticsRecord,
    InteractionL4, LocalAverage, LocalQuantity, References,
};
use crate::error::{Error, Result};
use crate::evolution::{evolve_from, DetectorThresholds, EvolveConfig, InitialData, TimeSeries};
use crate::field::Field;
use crate::grid::RadialGrid;
use crate::ground_states::{explicit_w, shoot_ground_state, ShootKind, SHOOT_TOL};
use crate::params::{PhysParams, P_MASS_CRITICAL};

/// Environment variable that replaces `[output].dir`.
pub const OUT_ENV: &str = "COULOMB_NLS_OUT";

/// Ball radius for the local time averages in the summary.
pub const LOCAL_AVERAGE_RADIUS: f64 = 10.0;

const MAX_SNAPSHOTS: usize = 256;

/// Where a run reads relative paths from and writes to.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Directory that `[initial].path` is relative to.
    pub base_dir: PathBuf,
}

impl RunOptions {
    /// `[output].dir` (or `$COULOMB_NLS_OUT`) relative to the working directory.
    pub fn from_env(cfg: &SimConfig) -> Self {
        let out_dir = std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| cfg.output.dir.clone());
        RunOptions {
            out_dir,
            base_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Drifts {
    pub mass: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub status: &'static str,
    pub poisoned: bool,
    pub final_time: f64,
    pub steps: usize,
    pub samples: usize,
    pub params: PhysParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification_error: Option<String>,
    pub interaction_l4: InteractionL4,
    pub drifts: Drifts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_time_average: Option<Vec<LocalAverage>>,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub series_csv: Option<PathBuf>,
    pub final_field_csv: Option<PathBuf>,
    pub summary_json: Option<PathBuf>,
    pub summary: Summary,
    pub series: TimeSeries,
}

/// Reads a configuration file.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_config(&text)?)
}

/// Runs with [`RunOptions::from_env`].
pub fn run_scenario(cfg: &SimConfig) -> Result<RunArtifacts> {
    run_scenario_with(cfg, &RunOptions::from_env(cfg))
}

pub fn run_scenario_with(cfg: &SimConfig, opts: &RunOptions) -> Result<RunArtifacts> {
    fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;
    let outcome = evolve_config(cfg, &opts.base_dir).and_then(|ec| {
        let u0 = ec.initial.build(&ec.grid, &ec.params)?;
        let series = evolve_from(&ec, u0)?;
        Ok((ec, series))
    });
    let (ec, series) = match outcome {
        Ok(ok) => ok,
        Err(e) => {
            if cfg.output.formats.contains(&Format::Json) {
                let msg = serde_json::json!({ "status": "error", "error": e.to_string() });
                let path = opts.out_dir.join("summary.json");
                write_text(&path, &(serde_json::to_string_pretty(&msg).expect("json") + "\n"))?;
            }
            return Err(e);
        }
    };
    let summary = summarize(&ec, &series)?;

    let mut art = RunArtifacts {
        dir: opts.out_dir.clone(),
        series_csv: None,
        final_field_csv: None,
        summary_json: None,
        summary,
        series,
    };
    if cfg.output.formats.contains(&Format::Csv) {
        let path = opts.out_dir.join("series.csv");
        write_text(&path, &series_csv(&art.series.samples))?;
        art.series_csv = Some(path);
        let path = opts.out_dir.join("final_field.csv");
        write_text(&path, &field_csv(&art.series.final_field))?;
        art.final_field_csv = Some(path);
    }
    if cfg.output.formats.contains(&Format::Json) {
        let path = opts.out_dir.join("summary.json");
        let text = serde_json::to_string_pretty(&art.summary).expect("summary serializes");
        write_text(&path, &(text + "\n"))?;
        art.summary_json = Some(path);
    }
    Ok(art)
}

/// The evolution described by `cfg`; `[initial].path` is read relative to `base_dir`.
pub fn evolve_config(cfg: &SimConfig, base_dir: &Path) -> Result<EvolveConfig> {
    let grid = RadialGrid::new(cfg.grid.r_max, cfg.grid.n)?;
    let initial = match &cfg.initial {
        InitialSpec::Gaussian { amplitude, width } => InitialData::Gaussian {
            amplitude: *amplitude,
            width: *width,
        },
        InitialSpec::BoundState { amplitude } => InitialData::BoundState {
            amplitude: *amplitude,
        },
        InitialSpec::Soliton => InitialData::Soliton,
        InitialSpec::GroundState { scale } => InitialData::GroundState { scale: *scale },
        InitialSpec::File { path } => {
            let full = base_dir.join(path);
            let text = fs::read_to_string(&full).map_err(|e| Error::io(&full, e))?;
            InitialData::Samples(parse_field_csv(&text, &grid)?)
        }
    };
    let mut ec = EvolveConfig::new(cfg.params, grid, initial, cfg.time.dt, cfg.time.t_max);
    ec.adaptive = cfg.time.adaptive;
    ec.detector = cfg.detector;
    ec.absorber = cfg.absorber;
    ec.sample_stride = cfg.time.sample_stride;
    if cfg.params.k > 0.0 {
        let steps = (cfg.time.t_max / cfg.time.dt).ceil() as usize;
        let samples = steps / cfg.time.sample_stride + 1;
        ec.snapshot_stride = Some(samples.div_ceil(MAX_SNAPSHOTS).max(1));
    }
    Ok(ec)
}

fn summarize(ec: &EvolveConfig, series: &TimeSeries) -> Result<Summary> {
    let (classification, classification_error) = match references_for(&ec.params, &ec.grid)
        .and_then(|refs| classify_initial_data(&series.initial_field, &ec.params, &refs))
    {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let local_time_average = if ec.params.k > 0.0 && !series.snapshots.is_empty() {
        let radius = LOCAL_AVERAGE_RADIUS.min(ec.grid.r_max());
        Some(vec![
            local_time_average(series, radius, LocalQuantity::Mass, &ec.params)?,
            local_time_average(series, radius, LocalQuantity::Gradient, &ec.params)?,
        ])
    } else {
        None
    };
    Ok(Summary {
        status: series.status.label(),
        poisoned: series.poisoned,
        final_time: series.final_time,
        steps: series.steps,
        samples: series.samples.len(),
        params: ec.params,
        classification,
        classification_error,
        interaction_l4: interaction_l4(series)?,
        drifts: Drifts {
            mass: series.mass_drift(),
            energy: series.energy_drift(),
        },
        local_time_average,
    })
}

/// The reference profiles the decision table needs for these parameters.
pub fn references_for(params: &PhysParams, grid: &RadialGrid) -> Result<References> {
    let mut refs = References::default();
    if params.lambda != -1 {
        return Ok(refs);
    }
    if params.is_energy_critical() {
        if params.k < 0.0 {
            refs.w = Some(explicit_w(grid));
        }
    } else if params.is_mass_critical() || (params.k < 0.0 && params.p > P_MASS_CRITICAL) {
        refs.q = Some(shoot_ground_state(ShootKind::Q { p: params.p }, grid, SHOOT_TOL)?);
    }
    Ok(refs)
}

/// Classification of the configured initial data.
pub fn classify_config(cfg: &SimConfig, base_dir: &Path) -> Result<Classification> {
    let ec = evolve_config(cfg, base_dir)?;
    let u0 = ec.initial.build(&ec.grid, &ec.params)?;
    classify_initial_data(&u0, &ec.params, &references_for(&ec.params, &ec.grid)?)
}

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `series.csv` contents: the header line and one row per sample.
pub fn series_csv(samples: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(64 + samples.len() * 14 * 24);
    out.push_str(DiagnosticsRecord::CSV_HEADER);
    out.push('\n');
    for rec in samples {
        for (i, x) in rec.columns().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_float(*x));
        }
        out.push('\n');
    }
    out
}

/// `r,re,im` rows.
pub fn field_csv(u: &Field) -> String {
    let mut out = String::from("r,re,im\n");
    for (r, z) in u.grid().nodes().iter().zip(u.values()) {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_float(*r),
            format_float(z.re),
            format_float(z.im)
        );
    }
    out
}

/// Inverse of [`field_csv`]; the radii must be the nodes of `grid`.
pub fn parse_field_csv(text: &str, grid: &RadialGrid) -> Result<Field> {
    let bad = |line: usize, why: &str| Error::param("initial.path", format!("line {line}: {why}"));
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("r,re,im") {
        return Err(bad(1, "expected header `r,re,im`"));
    }
    let nodes = grid.nodes();
    let mut values = Vec::with_capacity(grid.len());
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(bad(i + 2, "expected three columns"));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(i + 2, "not a number"));
        let (r, re, im) = (num(cols[0])?, num(cols[1])?, num(cols[2])?);
        let Some(&node) = nodes.get(i) else {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                actual: i + 1,
            });
        };
        if (r - node).abs() > 1e-9 * node.max(1.0) {
            return Err(bad(i + 2, "radius does not match the configured grid"));
        }
        values.push(Complex64::new(re, im));
    }
    if values.len() != grid.len() {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            actual: values.len(),
        });
    }
    Field::new(*grid, values)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Names of the built-in scenarios.
pub const SCENARIOS: [&str; 12] = [
    "bound_state",
    "soliton",
    "free_gaussian",
    "blowup_gaussian",
    "defocusing_scatter",
    "mass_critical_near_MQ",
    "defocusing_short",
    "morawetz",
    "blowup_negative_energy",
    "blowup_coulomb",
    "subthreshold_trap",
    "bound_state_long",
];

/// A built-in scenario by name.
pub fn scenario(name: &str) -> Option<SimConfig> {
    let gaussian = |amplitude: f64| InitialSpec::Gaussian {
        amplitude,
        width: 1.0,
    };
    let (k, lambda, p, (r_max, n), (dt, t_max, adaptive, stride), initial) = match name {
        "bound_state" => (
            2.0, 0, 3.0, (30.0, 4096), (1e-3, 1.0, false, 10),
            InitialSpec::BoundState { amplitude: 1.0 },
        ),
        // no soliton exists at K = 2, so the catalog uses K = 3
        "soliton" => (3.0, 1, 3.0, (30.0, 2048), (5e-4, 10.0, false, 20), InitialSpec::Soliton),
        "free_gaussian" => (0.0, 0, 3.0, (40.0, 1024), (1e-2, 1.0, false, 1), gaussian(1.0)),
        "blowup_gaussian" => (0.0, -1, 3.0, (30.0, 4096), (1e-3, 1.0, true, 4), gaussian(3.0)),
        "defocusing_scatter" => (-1.0, 1, 3.0, (800.0, 8192), (1e-2, 50.0, false, 1), gaussian(1.0)),
        "mass_critical_near_MQ" => (
            -1.0, -1, P_MASS_CRITICAL, (30.0, 1024), (1e-3, 2.0, true, 10),
            InitialSpec::GroundState { scale: 0.99 },
        ),
        "defocusing_short" => (-1.0, 1, 3.0, (40.0, 1024), (1e-3, 1.0, false, 1), gaussian(1.0)),
        "morawetz" => (-1.0, 1, 3.0, (400.0, 4096), (1e-2, 20.0, false, 1), gaussian(1.0)),
        "blowup_negative_energy" => (0.0, -1, 3.0, (15.0, 8192), (1e-3, 1.0, true, 4), gaussian(4.5)),
        "blowup_coulomb" => (2.0, -1, 3.0, (30.0, 4096), (1e-3, 1.0, true, 4), gaussian(4.0)),
        "subthreshold_trap" => (
            -1.0, -1, 3.0, (40.0, 1024), (1e-3, 10.0, false, 10),
            InitialSpec::GroundState { scale: 0.5 },
        ),
        "bound_state_long" => (
            2.0, 0, 3.0, (30.0, 1024), (1e-2, 10.0, false, 1),
            InitialSpec::BoundState { amplitude: 1.0 },
        ),
        _ => return None,
    };
    Some(SimConfig {
        params: PhysParams::new(k, lambda, p).expect("catalog parameters are valid"),
        grid: GridSpec { r_max, n },
        time: TimeSpec {
            dt,
            t_max,
            adaptive,
            sample_stride: stride,
        },
        initial,
        detector: DetectorThresholds::default(),
        output: OutputSpec {
            dir: PathBuf::from("out").join(name),
            ..OutputSpec::default()
        },
        absorber: false,
    })
}
