//! Run configuration: a TOML document with fixed sections and keys.
//!
//! ```toml
//! [physics]
//! K = 2.0
//! lambda = 0
//! p = 3.0
//!
//! [grid]
//! rmax = 30.0
//! n = 4096
//!
//! [time]
//! dt = 1e-3
//! tmax = 1.0
//! adaptive = false     # optional
//! sample_stride = 10   # optional, default 1
//!
//! [initial]
//! kind = "bound_state" # gaussian | bound_state | soliton | ground_state | file
//! amplitude = 1.0
//!
//! [detector]           # optional section
//! h1_factor = 10.0
//! sup_max = 1e3
//! dt_min = 1e-9
//!
//! [output]             # optional section
//! dir = "out"
//! formats = ["csv", "json"]
//!
//! [absorber]           # optional section
//! enabled = false
//! ```
//!
//! Unknown sections and keys are errors, as are keys that the chosen initial
//! kind does not use.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use crate::evolution::DetectorThresholds;
use crate::grid::MIN_NODES;
use crate::params::PhysParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{key}`: expected {expected}, found {found}")]
    TypeMismatch {
        key: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

type CfgResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_max: f64,
    pub adaptive: bool,
    pub sample_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Gaussian { amplitude: f64, width: f64 },
    BoundState { amplitude: f64 },
    Soliton,
    GroundState { scale: f64 },
    /// A `final_field.csv` written by an earlier run.
    File { path: PathBuf },
}

impl InitialSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            InitialSpec::Gaussian { .. } => "gaussian",
            InitialSpec::BoundState { .. } => "bound_state",
            InitialSpec::Soliton => "soliton",
            InitialSpec::GroundState { .. } => "ground_state",
            InitialSpec::File { .. } => "file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub formats: BTreeSet<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            formats: [Format::Csv, Format::Json].into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: PhysParams,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub initial: InitialSpec,
    pub detector: DetectorThresholds,
    pub output: OutputSpec,
    pub absorber: bool,
}

const SECTIONS: [&str; 7] = [
    "physics", "grid", "time", "initial", "detector", "output", "absorber",
];

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> CfgResult<SimConfig> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    for (name, value) in &doc {
        if !SECTIONS.contains(&name.as_str()) {
            return Err(ConfigError::UnknownSection(name.clone()));
        }
        if !value.is_table() {
            return Err(mismatch(name, "table", value));
        }
    }

    let physics = Section::required(&doc, "physics", &["K", "lambda", "p"])?;
    let k = physics.float("K")?;
    let lambda = physics.int("lambda")?;
    let p = physics.float("p")?;
    if !matches!(lambda, -1..=1) {
        return Err(physics.invalid("lambda", format!("{lambda} not in {{-1, 0, 1}}")));
    }
    if !(p > 1.0 && p <= 5.0) {
        return Err(physics.invalid("p", format!("{p} not in (1, 5]")));
    }
    let params = PhysParams::new(k, lambda as i8, p)
        .map_err(|e| physics.invalid("K", e.to_string()))?;

    let grid_sec = Section::required(&doc, "grid", &["rmax", "n"])?;
    let r_max = grid_sec.float("rmax")?;
    if !(r_max > 0.0) {
        return Err(grid_sec.invalid("rmax", "must be positive"));
    }
    let n = grid_sec.int("n")?;
    if n < MIN_NODES as i64 {
        return Err(grid_sec.invalid("n", format!("must be at least {MIN_NODES}")));
    }
    let grid = GridSpec {
        r_max,
        n: n as usize,
    };

    let time_sec = Section::required(&doc, "time", &["dt", "tmax", "adaptive", "sample_stride"])?;
    let dt = time_sec.float("dt")?;
    let t_max = time_sec.float("tmax")?;
    if !(dt > 0.0) {
        return Err(time_sec.invalid("dt", "must be positive"));
    }
    if !(t_max > 0.0) {
        return Err(time_sec.invalid("tmax", "must be positive"));
    }
    let adaptive = time_sec.opt_bool("adaptive")?.unwrap_or(false);
    let stride = time_sec.opt_int("sample_stride")?.unwrap_or(1);
    if stride < 1 {
        return Err(time_sec.invalid("sample_stride", "must be at least 1"));
    }
    let time = TimeSpec {
        dt,
        t_max,
        adaptive,
        sample_stride: stride as usize,
    };

    let initial = parse_initial(&doc)?;

    let defaults = DetectorThresholds::default();
    let detector = match Section::optional(&doc, "detector", &["h1_factor", "sup_max", "dt_min"])? {
        None => defaults,
        Some(s) => DetectorThresholds {
            h1_factor: s.opt_float("h1_factor")?.unwrap_or(defaults.h1_factor),
            sup_max: s.opt_float("sup_max")?.unwrap_or(defaults.sup_max),
            dt_min: s.opt_float("dt_min")?.unwrap_or(defaults.dt_min),
        },
    };
    if !(detector.h1_factor > 1.0) {
        return Err(invalid("detector.h1_factor", "must exceed 1"));
    }
    if !(detector.sup_max > 0.0) {
        return Err(invalid("detector.sup_max", "must be positive"));
    }
    if !(detector.dt_min > 0.0 && detector.dt_min < dt) {
        return Err(invalid("detector.dt_min", "must lie in (0, time.dt)"));
    }

    let output = match Section::optional(&doc, "output", &["dir", "formats"])? {
        None => OutputSpec::default(),
        Some(s) => {
            let mut out = OutputSpec::default();
            if let Some(dir) = s.opt_str("dir")? {
                out.dir = PathBuf::from(dir);
            }
            if let Some(list) = s.get("formats") {
                let items = list
                    .as_array()
                    .ok_or_else(|| mismatch(&s.key("formats"), "array of strings", list))?;
                out.formats = BTreeSet::new();
                for item in items {
                    let name = item
                        .as_str()
                        .ok_or_else(|| mismatch(&s.key("formats"), "array of strings", item))?;
                    out.formats.insert(match name {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        other => {
                            return Err(s.invalid("formats", format!("`{other}` not in {{csv, json}}")))
                        }
                    });
                }
            }
            out
        }
    };

    let absorber = match Section::optional(&doc, "absorber", &["enabled"])? {
        None => false,
        Some(s) => s.opt_bool("enabled")?.unwrap_or(false),
    };

    Ok(SimConfig {
        params,
        grid,
        time,
        initial,
        detector,
        output,
        absorber,
    })
}

fn parse_initial(doc: &Table) -> CfgResult<InitialSpec> {
    let s = Section::required(
        doc,
        "initial",
        &["kind", "amplitude", "width", "scale", "path"],
    )?;
    let kind = s.str("kind")?;
    let (spec, used): (InitialSpec, &[&str]) = match kind {
        "gaussian" => (
            InitialSpec::Gaussian {
                amplitude: s.float("amplitude")?,
                width: s.float("width")?,
            },
            &["amplitude", "width"],
        ),
        "bound_state" => (
            InitialSpec::BoundState {
                amplitude: s.opt_float("amplitude")?.unwrap_or(1.0),
            },
            &["amplitude"],
        ),
        "soliton" => (InitialSpec::Soliton, &[]),
        "ground_state" => (
            InitialSpec::GroundState {
                scale: s.float("scale")?,
            },
            &["scale"],
        ),
        "file" => (
            InitialSpec::File {
                path: PathBuf::from(s.str("path")?),
            },
            &["path"],
        ),
        other => {
            return Err(s.invalid(
                "kind",
                format!("`{other}` not in {{gaussian, bound_state, soliton, ground_state, file}}"),
            ))
        }
    };
    for key in s.table.keys() {
        if key != "kind" && !used.contains(&key.as_str()) {
            return Err(s.invalid(key, format!("not used by kind `{kind}`")));
        }
    }
    if let InitialSpec::Gaussian { width, .. } = spec {
        if !(width > 0.0) {
            return Err(s.invalid("width", "must be positive"));
        }
    }
    Ok(spec)
}

impl SimConfig {
    /// Serializes to a document that [`parse_config`] maps back to `self`.
    pub fn to_toml(&self) -> String {
        let mut doc = Table::new();
        let mut physics = Table::new();
        physics.insert("K".into(), Value::Float(self.params.k));
        physics.insert("lambda".into(), Value::Integer(self.params.lambda.into()));
        physics.insert("p".into(), Value::Float(self.params.p));
        doc.insert("physics".into(), Value::Table(physics));

        let mut grid = Table::new();
        grid.insert("rmax".into(), Value::Float(self.grid.r_max));
        grid.insert("n".into(), Value::Integer(self.grid.n as i64));
        doc.insert("grid".into(), Value::Table(grid));

        let mut time = Table::new();
        time.insert("dt".into(), Value::Float(self.time.dt));
        time.insert("tmax".into(), Value::Float(self.time.t_max));
        time.insert("adaptive".into(), Value::Boolean(self.time.adaptive));
        time.insert(
            "sample_stride".into(),
            Value::Integer(self.time.sample_stride as i64),
        );
        doc.insert("time".into(), Value::Table(time));

        let mut initial = Table::new();
        initial.insert("kind".into(), Value::String(self.initial.kind().into()));
        match &self.initial {
            InitialSpec::Gaussian { amplitude, width } => {
                initial.insert("amplitude".into(), Value::Float(*amplitude));
                initial.insert("width".into(), Value::Float(*width));
            }
            InitialSpec::BoundState { amplitude } => {
                initial.insert("amplitude".into(), Value::Float(*amplitude));
            }
            InitialSpec::Soliton => {}
            InitialSpec::GroundState { scale } => {
                initial.insert("scale".into(), Value::Float(*scale));
            }
            InitialSpec::File { path } => {
                initial.insert("path".into(), Value::String(path.display().to_string()));
            }
        }
        doc.insert("initial".into(), Value::Table(initial));

        let mut detector = Table::new();
        detector.insert("h1_factor".into(), Value::Float(self.detector.h1_factor));
        detector.insert("sup_max".into(), Value::Float(self.detector.sup_max));
        detector.insert("dt_min".into(), Value::Float(self.detector.dt_min));
        doc.insert("detector".into(), Value::Table(detector));

        let mut output = Table::new();
        output.insert(
            "dir".into(),
            Value::String(self.output.dir.display().to_string()),
        );
        let formats = self
            .output
            .formats
            .iter()
            .map(|f| {
                Value::String(
                    match f {
                        Format::Csv => "csv",
                        Format::Json => "json",
                    }
                    .into(),
                )
            })
            .collect();
        output.insert("formats".into(), Value::Array(formats));
        doc.insert("output".into(), Value::Table(output));

        let mut absorber = Table::new();
        absorber.insert("enabled".into(), Value::Boolean(self.absorber));
        doc.insert("absorber".into(), Value::Table(absorber));

        toml::to_string(&doc).expect("plain tables serialize")
    }
}

struct Section<'a> {
    name: &'static str,
    table: &'a Table,
}

impl<'a> Section<'a> {
    fn required(doc: &'a Table, name: &'static str, keys: &[&str]) -> CfgResult<Self> {
        Self::optional(doc, name, keys)?.ok_or_else(|| ConfigError::MissingSection(name.into()))
    }

    fn optional(doc: &'a Table, name: &'static str, keys: &[&str]) -> CfgResult<Option<Self>> {
        let Some(table) = doc.get(name).and_then(Value::as_table) else {
            return Ok(None);
        };
        for key in table.keys() {
            if !keys.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(format!("{name}.{key}")));
            }
        }
        Ok(Some(Section { name, table }))
    }

    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        invalid(&self.key(key), reason)
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.table.get(key)
    }

    fn need(&self, key: &str) -> CfgResult<&Value> {
        self.get(key).ok_or_else(|| ConfigError::MissingKey(self.key(key)))
    }

    fn float(&self, key: &str) -> CfgResult<f64> {
        as_float(&self.key(key), self.need(key)?)
    }

    fn opt_float(&self, key: &str) -> CfgResult<Option<f64>> {
        self.get(key).map(|v| as_float(&self.key(key), v)).transpose()
    }

    fn int(&self, key: &str) -> CfgResult<i64> {
        let v = self.need(key)?;
        v.as_integer().ok_or_else(|| mismatch(&self.key(key), "integer", v))
    }

    fn opt_int(&self, key: &str) -> CfgResult<Option<i64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_integer()
                .map(Some)
                .ok_or_else(|| mismatch(&self.key(key), "integer", v)),
        }
    }

    fn opt_bool(&self, key: &str) -> CfgResult<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_bool()
                .map(Some)
                .ok_or_else(|| mismatch(&self.key(key), "boolean", v)),
        }
    }

    fn str(&self, key: &str) -> CfgResult<&'a str> {
        let v = self
            .table
            .get(key)
            .ok_or_else(|| ConfigError::MissingKey(self.key(key)))?;
        v.as_str().ok_or_else(|| mismatch(&self.key(key), "string", v))
    }

    fn opt_str(&self, key: &str) -> CfgResult<Option<&'a str>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(Some)
                .ok_or_else(|| mismatch(&self.key(key), "string", v)),
        }
    }
}

/// Integers are accepted where floats are expected (`K = 2`).
fn as_float(key: &str, v: &Value) -> CfgResult<f64> {
    let x = match v {
        Value::Float(x) => *x,
        Value::Integer(i) => *i as f64,
        _ => return Err(mismatch(key, "number", v)),
    };
    if !x.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(x)
}

fn mismatch(key: &str, expected: &'static str, found: &Value) -> ConfigError {
    ConfigError::TypeMismatch {
        key: key.to_string(),
        expected,
        found: found.type_str(),
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}
