//! TOML run configuration.
//!
//! Quantities with a physical unit must be written as strings with an explicit
//! suffix (`"300 m"`, `"30 dBm"`, `"-20 dB"`, `"0.01 lin"`). A bare number in
//! one of those fields is rejected, since mixing dB and linear values silently
//! is the easiest way to get a plan that is wrong by orders of magnitude.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::channel::NetworkScenario;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("field `{field}`: bad quantity {value:?}: {message}")]
    Unit {
        field: String,
        value: String,
        message: String,
    },
}

fn schema(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Secrecy,
    Covert,
    Validate,
    Sweep,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Secrecy => "secrecy",
            Mode::Covert => "covert",
            Mode::Validate => "validate",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Secrecy,
    Covert,
}

impl Problem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Problem::Secrecy => "secrecy",
            Problem::Covert => "covert",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Zeta,
    Epsilon,
    Height,
    Hops,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::Zeta => "zeta",
            SweepVariable::Epsilon => "epsilon",
            SweepVariable::Height => "height",
            SweepVariable::Hops => "hops",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub problem: Problem,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    /// Grid points in order. Hop grids are rounded and deduplicated.
    pub fn grid(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        let mut pts: Vec<f64> = (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i == self.count - 1 {
                    return self.max;
                }
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + f * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + f * (self.max / self.min).ln()).exp(),
                }
            })
            .collect();
        if self.variable == SweepVariable::Hops {
            pts = pts.into_iter().map(f64::round).collect();
            pts.dedup();
        }
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraints {
    pub zeta: Option<f64>,
    pub epsilon: Option<f64>,
    /// Total power budget in watts.
    pub power_total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSpec {
    pub trials: u64,
    pub seed: u64,
}

impl Default for McSpec {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// A fully resolved run: every quantity in linear SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub scenario: NetworkScenario,
    pub constraints: Constraints,
    pub sweep: Option<SweepSpec>,
    pub mc: McSpec,
    pub output: OutputSpec,
}

// ---- raw file layout ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<String>,
    scenario: Option<RawScenario>,
    constraints: Option<RawConstraints>,
    sweep: Option<RawSweep>,
    mc: Option<RawMc>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    distance: Option<toml::Value>,
    hops: Option<i64>,
    height: Option<toml::Value>,
    offset: Option<toml::Value>,
    alpha: Option<f64>,
    beta_los: Option<f64>,
    beta_nlos: Option<f64>,
    env_b: Option<f64>,
    env_c: Option<f64>,
    excess_nlos: Option<toml::Value>,
    noise: Option<toml::Value>,
    reference_gain: Option<toml::Value>,
    codeword_length: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraints {
    zeta: Option<f64>,
    epsilon: Option<f64>,
    power_total: Option<toml::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: Option<String>,
    problem: Option<String>,
    min: Option<toml::Value>,
    max: Option<toml::Value>,
    count: Option<i64>,
    spacing: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    trials: Option<i64>,
    seed: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<String>,
    format: Option<String>,
}

// ---- units ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Length,
    Power,
    Ratio,
}

impl Kind {
    fn suffixes(&self) -> &'static str {
        match self {
            Kind::Length => "\"m\"",
            Kind::Power => "\"W\" or \"dBm\"",
            Kind::Ratio => "\"dB\" or \"lin\"",
        }
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Parses `"<number> <unit>"` into linear SI units.
fn parse_quantity(field: &str, text: &str, kind: Kind) -> Result<f64, ConfigError> {
    let bad = |message: String| ConfigError::Unit {
        field: field.to_string(),
        value: text.to_string(),
        message,
    };
    let trimmed = text.trim();
    let split = trimmed
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .or_else(|| {
            // a unit spelled only with e/E, e.g. "3 e"
            trimmed.rfind(' ').map(|i| i + 1)
        })
        .ok_or_else(|| bad(format!("missing unit suffix, expected {}", kind.suffixes())))?;
    let (num, unit) = trimmed.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| bad(format!("cannot read number {:?}", num.trim())))?;
    if !value.is_finite() {
        return Err(bad("value must be finite".into()));
    }
    let linear = match (kind, unit.trim()) {
        (Kind::Length, "m") => value,
        (Kind::Power, "W") => value,
        (Kind::Power, "dBm") => db_to_linear(value - 30.0),
        (Kind::Ratio, "lin") => value,
        (Kind::Ratio, "dB") => db_to_linear(value),
        (_, u) => {
            return Err(bad(format!(
                "unit {u:?} not allowed here, expected {}",
                kind.suffixes()
            )))
        }
    };
    Ok(linear)
}

fn quantity(field: &str, value: &toml::Value, kind: Kind) -> Result<f64, ConfigError> {
    match value {
        toml::Value::String(s) => parse_quantity(field, s, kind),
        toml::Value::Integer(_) | toml::Value::Float(_) => Err(ConfigError::Unit {
            field: field.to_string(),
            value: value.to_string(),
            message: format!("bare number; add a unit suffix, one of {}", kind.suffixes()),
        }),
        other => Err(schema(field, format!("expected a quantity string, got {}", other.type_str()))),
    }
}

fn opt_quantity(field: &str, value: Option<&toml::Value>, kind: Kind) -> Result<Option<f64>, ConfigError> {
    value.map(|v| quantity(field, v, kind)).transpose()
}

fn plain_number(field: &str, value: &toml::Value) -> Result<f64, ConfigError> {
    match value {
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::Float(f) => Ok(*f),
        other => Err(schema(field, format!("expected a number, got {}", other.type_str()))),
    }
}

fn count_field(field: &str, v: i64, min: i64) -> Result<usize, ConfigError> {
    if v < min {
        return Err(schema(field, format!("must be at least {min}, got {v}")));
    }
    Ok(v as usize)
}

// ---- loading ----

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and resolves a configuration held in memory.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

    let mode = match raw.mode.as_deref() {
        None => return Err(schema("mode", "required; one of secrecy, covert, validate, sweep")),
        Some("secrecy") => Mode::Secrecy,
        Some("covert") => Mode::Covert,
        Some("validate") => Mode::Validate,
        Some("sweep") => Mode::Sweep,
        Some(other) => {
            return Err(schema(
                "mode",
                format!("unknown mode {other:?}; one of secrecy, covert, validate, sweep"),
            ))
        }
    };

    let scenario = resolve_scenario(raw.scenario.ok_or_else(|| schema("scenario", "required"))?)?;
    let rc = raw
        .constraints
        .ok_or_else(|| schema("constraints", "required"))?;
    let power_total = quantity(
        "constraints.power_total",
        rc.power_total
            .as_ref()
            .ok_or_else(|| schema("constraints.power_total", "required"))?,
        Kind::Power,
    )?;
    let constraints = Constraints {
        zeta: rc.zeta,
        epsilon: rc.epsilon,
        power_total,
    };

    let sweep = match (mode, raw.sweep) {
        (Mode::Sweep, Some(s)) => Some(resolve_sweep(s)?),
        (Mode::Sweep, None) => return Err(schema("sweep", "required when mode = \"sweep\"")),
        (_, Some(_)) => return Err(schema("sweep", "only allowed when mode = \"sweep\"")),
        (_, None) => None,
    };

    let needs = |field: &str, present: bool, why: &str| {
        if present {
            Ok(())
        } else {
            Err(schema(field, format!("required {why}")))
        }
    };
    match (mode, &sweep) {
        (Mode::Secrecy, _) => needs("constraints.zeta", constraints.zeta.is_some(), "for mode secrecy")?,
        (Mode::Covert, _) => needs("constraints.epsilon", constraints.epsilon.is_some(), "for mode covert")?,
        (Mode::Validate, _) => needs(
            "constraints.zeta",
            constraints.zeta.is_some() || constraints.epsilon.is_some(),
            "(or constraints.epsilon) for mode validate",
        )?,
        (Mode::Sweep, Some(s)) => match (s.variable, s.problem) {
            (SweepVariable::Zeta, _) | (SweepVariable::Epsilon, _) => {}
            (_, Problem::Secrecy) => {
                needs("constraints.zeta", constraints.zeta.is_some(), "for a secrecy sweep")?
            }
            (_, Problem::Covert) => {
                needs("constraints.epsilon", constraints.epsilon.is_some(), "for a covert sweep")?
            }
        },
        (Mode::Sweep, None) => unreachable!("checked above"),
    }

    let mc = match raw.mc {
        None => McSpec::default(),
        Some(m) => McSpec {
            trials: m
                .trials
                .map(|t| count_field("mc.trials", t, 2).map(|t| t as u64))
                .transpose()?
                .unwrap_or(McSpec::default().trials),
            seed: match m.seed {
                None => McSpec::default().seed,
                Some(s) if s < 0 => return Err(schema("mc.seed", "must be non-negative")),
                Some(s) => s as u64,
            },
        },
    };

    let output = match raw.output {
        None => OutputSpec {
            path: None,
            format: Format::Csv,
        },
        Some(o) => OutputSpec {
            path: o.path.map(PathBuf::from),
            format: match o.format.as_deref() {
                None | Some("csv") => Format::Csv,
                Some("json") => Format::Json,
                Some(other) => {
                    return Err(schema("output.format", format!("unknown format {other:?}; csv or json")))
                }
            },
        },
    };

    Ok(RunConfig {
        mode,
        scenario,
        constraints,
        sweep,
        mc,
        output,
    })
}

fn resolve_scenario(raw: RawScenario) -> Result<NetworkScenario, ConfigError> {
    let distance = quantity(
        "scenario.distance",
        raw.distance
            .as_ref()
            .ok_or_else(|| schema("scenario.distance", "required"))?,
        Kind::Length,
    )?;
    let height = quantity(
        "scenario.height",
        raw.height
            .as_ref()
            .ok_or_else(|| schema("scenario.height", "required"))?,
        Kind::Length,
    )?;
    let hops = count_field(
        "scenario.hops",
        raw.hops.ok_or_else(|| schema("scenario.hops", "required"))?,
        1,
    )?;
    let mut s = NetworkScenario::new(distance, hops, height);
    if let Some(v) = opt_quantity("scenario.offset", raw.offset.as_ref(), Kind::Length)? {
        s.uav_ground_offset = v;
    }
    if let Some(v) = raw.alpha {
        s.path_loss_terrestrial = v;
    }
    if let Some(v) = raw.beta_los {
        s.path_loss_los = v;
    }
    if let Some(v) = raw.beta_nlos {
        s.path_loss_nlos = v;
    }
    if let Some(v) = raw.env_b {
        s.env_b = v;
    }
    if let Some(v) = raw.env_c {
        s.env_c = v;
    }
    if let Some(v) = opt_quantity("scenario.excess_nlos", raw.excess_nlos.as_ref(), Kind::Ratio)? {
        s.excess_nlos = v;
    }
    if let Some(v) = opt_quantity("scenario.noise", raw.noise.as_ref(), Kind::Power)? {
        s.noise_normalized = v;
    }
    if let Some(v) = opt_quantity("scenario.reference_gain", raw.reference_gain.as_ref(), Kind::Ratio)? {
        s.reference_gain = v;
    }
    if let Some(v) = raw.codeword_length {
        s.codeword_length = count_field("scenario.codeword_length", v, 1)?;
    }
    s.validate().map_err(|e| schema("scenario", e.to_string()))?;
    Ok(s)
}

fn resolve_sweep(raw: RawSweep) -> Result<SweepSpec, ConfigError> {
    let variable = match raw.variable.as_deref() {
        Some("zeta") => SweepVariable::Zeta,
        Some("epsilon") => SweepVariable::Epsilon,
        Some("height") => SweepVariable::Height,
        Some("hops") => SweepVariable::Hops,
        None => return Err(schema("sweep.variable", "required; one of zeta, epsilon, height, hops")),
        Some(other) => return Err(schema("sweep.variable", format!("unknown variable {other:?}"))),
    };
    let problem = match (variable, raw.problem.as_deref()) {
        (SweepVariable::Zeta, None | Some("secrecy")) => Problem::Secrecy,
        (SweepVariable::Epsilon, None | Some("covert")) => Problem::Covert,
        (SweepVariable::Zeta | SweepVariable::Epsilon, Some(p)) => {
            return Err(schema(
                "sweep.problem",
                format!("{p:?} does not match the swept variable {}", variable.as_str()),
            ))
        }
        (_, Some("secrecy")) => Problem::Secrecy,
        (_, Some("covert")) => Problem::Covert,
        (_, None) => return Err(schema("sweep.problem", "required for height and hops sweeps")),
        (_, Some(p)) => return Err(schema("sweep.problem", format!("unknown problem {p:?}"))),
    };
    let bound = |field: &str, v: Option<&toml::Value>| -> Result<f64, ConfigError> {
        let v = v.ok_or_else(|| schema(field, "required"))?;
        match variable {
            SweepVariable::Height => quantity(field, v, Kind::Length),
            _ => plain_number(field, v),
        }
    };
    let min = bound("sweep.min", raw.min.as_ref())?;
    let max = bound("sweep.max", raw.max.as_ref())?;
    let count = count_field(
        "sweep.count",
        raw.count.ok_or_else(|| schema("sweep.count", "required"))?,
        2,
    )?;
    let spacing = match raw.spacing.as_deref() {
        None | Some("linear") => Spacing::Linear,
        Some("log") => Spacing::Log,
        Some(other) => return Err(schema("sweep.spacing", format!("unknown spacing {other:?}; linear or log"))),
    };
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(schema("sweep.max", format!("need min < max, got [{min}, {max}]")));
    }
    if spacing == Spacing::Log && !(min > 0.0) {
        return Err(schema("sweep.min", "log spacing needs a positive minimum"));
    }
    // budget ranges are checked by the solvers, which report them as infeasible
    let in_range = match variable {
        SweepVariable::Zeta | SweepVariable::Epsilon => true,
        SweepVariable::Height => min > 0.0,
        SweepVariable::Hops => min >= 1.0 && min.fract() == 0.0 && max.fract() == 0.0,
    };
    if !in_range {
        return Err(schema(
            "sweep.min",
            format!("[{min}, {max}] is not a valid range for {}", variable.as_str()),
        ));
    }
    Ok(SweepSpec {
        variable,
        problem,
        min,
        max,
        count,
        spacing,
    })
}

// ---- emitting ----

impl RunConfig {
    /// The resolved configuration as TOML in linear units. Reloading it
    /// reproduces every field bit for bit.
    pub fn to_toml(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        let _ = writeln!(out, "mode = {:?}", self.mode.as_str());
        let _ = writeln!(out, "\n[scenario]");
        let _ = writeln!(out, "distance = \"{:?} m\"", s.distance_sd);
        let _ = writeln!(out, "hops = {}", s.hops);
        let _ = writeln!(out, "height = \"{:?} m\"", s.uav_height);
        let _ = writeln!(out, "offset = \"{:?} m\"", s.uav_ground_offset);
        let _ = writeln!(out, "alpha = {:?}", s.path_loss_terrestrial);
        let _ = writeln!(out, "beta_los = {:?}", s.path_loss_los);
        let _ = writeln!(out, "beta_nlos = {:?}", s.path_loss_nlos);
        let _ = writeln!(out, "env_b = {:?}", s.env_b);
        let _ = writeln!(out, "env_c = {:?}", s.env_c);
        let _ = writeln!(out, "excess_nlos = \"{:?} lin\"", s.excess_nlos);
        let _ = writeln!(out, "noise = \"{:?} W\"", s.noise_normalized);
        let _ = writeln!(out, "reference_gain = \"{:?} lin\"", s.reference_gain);
        let _ = writeln!(out, "codeword_length = {}", s.codeword_length);
        let _ = writeln!(out, "\n[constraints]");
        if let Some(z) = self.constraints.zeta {
            let _ = writeln!(out, "zeta = {z:?}");
        }
        if let Some(e) = self.constraints.epsilon {
            let _ = writeln!(out, "epsilon = {e:?}");
        }
        let _ = writeln!(out, "power_total = \"{:?} W\"", self.constraints.power_total);
        if let Some(sw) = &self.sweep {
            let _ = writeln!(out, "\n[sweep]");
            let _ = writeln!(out, "variable = {:?}", sw.variable.as_str());
            let _ = writeln!(out, "problem = {:?}", sw.problem.as_str());
            match sw.variable {
                SweepVariable::Height => {
                    let _ = writeln!(out, "min = \"{:?} m\"\nmax = \"{:?} m\"", sw.min, sw.max);
                }
                _ => {
                    let _ = writeln!(out, "min = {:?}\nmax = {:?}", sw.min, sw.max);
                }
            }
            let _ = writeln!(out, "count = {}", sw.count);
            let spacing = match sw.spacing {
                Spacing::Linear => "linear",
                Spacing::Log => "log",
            };
            let _ = writeln!(out, "spacing = {spacing:?}");
        }
        let _ = writeln!(out, "\n[mc]");
        let _ = writeln!(out, "trials = {}", self.mc.trials);
        let _ = writeln!(out, "seed = {}", self.mc.seed);
        let _ = writeln!(out, "\n[output]");
        if let Some(p) = &self.output.path {
            let _ = writeln!(out, "path = {:?}", p.to_string_lossy());
        }
        let _ = writeln!(out, "format = {:?}", self.output.format.as_str());
        out
    }
}

/// Annotated description of every config key, printed by `relayguard schema`.
pub const SCHEMA: &str = r#"# relayguard run configuration (TOML)
#
# Fields marked <quantity> take a string with a unit suffix:
#   lengths  "300 m"
#   powers   "30 dBm" | "1 W"
#   ratios   "-20 dB" | "0.01 lin"
# A bare number in a <quantity> field is an error.

mode = "secrecy"            # required: secrecy | covert | validate | sweep

[scenario]
distance = "300 m"          # required <quantity>: source-destination distance D
hops = 7                    # required: number of hops N (>= 1)
height = "300 m"            # required <quantity>: UAV height H
# offset = "150 m"          # <quantity>: UAV ground position along the link (default D/2)
# alpha = 3.0               # terrestrial path-loss exponent
# beta_los = 2.5            # air-to-ground LoS path-loss exponent
# beta_nlos = 2.8           # air-to-ground NLoS path-loss exponent
# env_b = 0.136             # LoS probability slope B
# env_c = 11.95             # LoS probability offset C
# excess_nlos = "-20 dB"    # <quantity>: extra NLoS attenuation eta
# noise = "-70 dBm"         # <quantity>: noise power normalized by the reference gain
# reference_gain = "-40 dB" # <quantity>: path gain at 1 m (absolute warden units only)
# codeword_length = 10      # symbols per hop observed by the warden, L

[constraints]
zeta = 0.1                  # secrecy-outage budget in (0, 1); secrecy problems
# epsilon = 0.05            # covertness budget in (0, 1); covert problems
power_total = "30 dBm"      # required <quantity>: total transmit power over all hops

# Only with mode = "sweep".
# [sweep]
# variable = "zeta"         # zeta | epsilon | height | hops
# problem = "secrecy"       # secrecy | covert; implied by zeta/epsilon, required otherwise
# min = 0.001               # <quantity> for height, plain number otherwise
# max = 0.3
# count = 25                # >= 2; hop grids are rounded to integers
# spacing = "log"           # linear (default) | log

[mc]
trials = 100000             # Monte Carlo trials per oracle (>= 2)
seed = 1                    # base seed; results do not depend on thread count

[output]
# path = "result.csv"       # default: standard output
format = "csv"              # csv | json
"#;
