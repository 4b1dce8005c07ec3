//! Sweep configuration: TOML schema, validation and the CLI range syntax.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dressed_spectra::log_spaced;
use crate::system_model::{CouplingMode, DiamondSetup, PRESET_NAME, RB87_TRANSITIONS};

/// Upper bound on the number of points in one sweep.
pub const MAX_POINTS: usize = 1_000_000;
pub const DEFAULT_OUTPUT_DIR: &str = "lehmberg-out";
pub const OUTPUT_DIR_ENV: &str = "LEHMBERG_OUTPUT_DIR";
pub const WORKERS_ENV: &str = "LEHMBERG_WORKERS";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// `start:stop:points[:log]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RangeSpecError {
    #[error("expected start:stop:points[:log], got {0:?}")]
    Format(String),
    #[error("{field} is not a number: {value:?}")]
    Number { field: &'static str, value: String },
    #[error("{0}")]
    Domain(String),
}

impl RangeSpec {
    pub fn new(start: f64, stop: f64, points: usize, spacing: Spacing) -> Result<Self, RangeSpecError> {
        if !start.is_finite() || !stop.is_finite() {
            return Err(RangeSpecError::Domain(format!("range bounds must be finite, got {start} and {stop}")));
        }
        if points == 0 {
            return Err(RangeSpecError::Domain("point count must be at least 1".into()));
        }
        if points > MAX_POINTS {
            return Err(RangeSpecError::Domain(format!("point count {points} exceeds {MAX_POINTS}")));
        }
        if spacing == Spacing::Log && (start <= 0.0 || stop <= 0.0) {
            return Err(RangeSpecError::Domain("log spacing needs positive bounds".into()));
        }
        if points == 1 && start != stop {
            return Err(RangeSpecError::Domain("a single point needs start == stop".into()));
        }
        Ok(Self {
            start,
            stop,
            points,
            spacing,
        })
    }

    /// Grid values; both endpoints are exact.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        match self.spacing {
            Spacing::Log => log_spaced(self.start, self.stop, self.points),
            Spacing::Linear => {
                let last = (self.points - 1) as f64;
                (0..self.points)
                    .map(|i| {
                        if i + 1 == self.points {
                            self.stop
                        } else {
                            self.start + (self.stop - self.start) * i as f64 / last
                        }
                    })
                    .collect()
            }
        }
    }
}

impl FromStr for RangeSpec {
    type Err = RangeSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let spacing = match parts.len() {
            3 => Spacing::Linear,
            4 if parts[3].eq_ignore_ascii_case("log") => Spacing::Log,
            4 if parts[3].eq_ignore_ascii_case("lin") || parts[3].eq_ignore_ascii_case("linear") => Spacing::Linear,
            _ => return Err(RangeSpecError::Format(s.to_string())),
        };
        let number = |field: &'static str, v: &str| {
            v.trim().parse::<f64>().map_err(|_| RangeSpecError::Number {
                field,
                value: v.to_string(),
            })
        };
        let start = number("start", parts[0])?;
        let stop = number("stop", parts[1])?;
        let points = parts[2].trim().parse::<usize>().map_err(|_| RangeSpecError::Number {
            field: "points",
            value: parts[2].to_string(),
        })?;
        RangeSpec::new(start, stop, points, spacing)
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.points)?;
        if self.spacing == Spacing::Log {
            f.write_str(":log")?;
        }
        Ok(())
    }
}

/// Parameter varied along one sweep axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Delta1,
    Delta2,
    SeparationNm,
    Rabi01,
    Rabi12,
    /// Second-laser power; sets `rabi12` through the square-root convention.
    PowerMw,
    /// Explicit `(rabi01, rabi12)` pairs.
    RabiPairs,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::Delta1 => "delta1",
            AxisKind::Delta2 => "delta2",
            AxisKind::SeparationNm => "separation_nm",
            AxisKind::Rabi01 => "rabi01",
            AxisKind::Rabi12 => "rabi12",
            AxisKind::PowerMw => "power_mw",
            AxisKind::RabiPairs => "rabi_pairs",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AxisValues {
    Scalars(Vec<f64>),
    Pairs(Vec<(f64, f64)>),
}

impl AxisValues {
    pub fn len(&self) -> usize {
        match self {
            AxisValues::Scalars(v) => v.len(),
            AxisValues::Pairs(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub kind: AxisKind,
    pub values: AxisValues,
}

impl Axis {
    pub fn scalars(kind: AxisKind, values: Vec<f64>) -> Self {
        Self {
            kind,
            values: AxisValues::Scalars(values),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerScale {
    /// `Λ₁₂ = Λ₁₂,ref · sqrt(P / P_ref)`.
    Sqrt,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerScaling {
    pub scale: PowerScale,
    pub reference_mw: f64,
    pub reference_rabi12: f64,
}

impl PowerScaling {
    pub fn rabi12(&self, power_mw: f64) -> f64 {
        match self.scale {
            PowerScale::Sqrt => self.reference_rabi12 * (power_mw / self.reference_mw).sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            _ => Err(ConfigError::invalid("output.format", format!("expected csv or jsonl, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            format: OutputFormat::Csv,
        }
    }
}

/// Fully resolved and validated sweep configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub preset: String,
    pub base: DiamondSetup,
    /// Outermost axis first.
    pub axes: Vec<Axis>,
    pub power: Option<PowerScaling>,
    pub output: OutputConfig,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
}

/// One sweep point with the setup it resolves to.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub setup: DiamondSetup,
    /// Value of every axis at this point, in axis order (pairs take two slots).
    pub coordinates: Vec<f64>,
}

// Raw TOML layer.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: String,
    #[serde(default)]
    parameters: RawParameters,
    #[serde(default)]
    sweep: Vec<RawAxis>,
    power: Option<RawPower>,
    #[serde(default)]
    output: RawOutput,
    workers: Option<usize>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameters {
    delta1: Option<f64>,
    delta2: Option<f64>,
    rabi01: Option<f64>,
    rabi12: Option<f64>,
    separation_nm: Option<f64>,
    couplings: Option<CouplingMode>,
    secular_threshold: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    axis: AxisKind,
    start: Option<f64>,
    stop: Option<f64>,
    points: Option<usize>,
    spacing: Option<Spacing>,
    values: Option<Vec<f64>>,
    pairs: Option<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPower {
    scale: PowerScale,
    reference_mw: f64,
    reference_rabi12: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    format: Option<OutputFormat>,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = offset - before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

fn finite(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::invalid(field, format!("must be finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64, ConfigError> {
    if finite(field, v)? < 0.0 {
        return Err(ConfigError::invalid(field, format!("must be non-negative, got {v}")));
    }
    Ok(v)
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if finite(field, v)? <= 0.0 {
        return Err(ConfigError::invalid(field, format!("must be positive, got {v}")));
    }
    Ok(v)
}

/// Domain check for one value of `kind`.
fn check_axis_value(kind: AxisKind, field: &str, v: f64) -> Result<f64, ConfigError> {
    match kind {
        AxisKind::Delta1 | AxisKind::Delta2 => finite(field, v),
        AxisKind::SeparationNm => positive(field, v),
        AxisKind::Rabi01 | AxisKind::Rabi12 | AxisKind::PowerMw | AxisKind::RabiPairs => non_negative(field, v),
    }
}

fn resolve_axis(i: usize, raw: RawAxis) -> Result<Axis, ConfigError> {
    let field = |name: &str| format!("sweep[{i}].{name}");
    let kind = raw.axis;
    let has_range = raw.start.is_some() || raw.stop.is_some() || raw.points.is_some() || raw.spacing.is_some();
    let values = match (kind, has_range, raw.values, raw.pairs) {
        (AxisKind::RabiPairs, false, None, Some(pairs)) => {
            if pairs.is_empty() {
                return Err(ConfigError::invalid(field("pairs"), "must not be empty"));
            }
            for &[a, b] in &pairs {
                check_axis_value(kind, &field("pairs"), a)?;
                check_axis_value(kind, &field("pairs"), b)?;
            }
            AxisValues::Pairs(pairs.into_iter().map(|[a, b]| (a, b)).collect())
        }
        (AxisKind::RabiPairs, ..) => {
            return Err(ConfigError::invalid(field("pairs"), "rabi_pairs axes take only `pairs = [[rabi01, rabi12], ...]`"))
        }
        (_, _, _, Some(_)) => return Err(ConfigError::invalid(field("pairs"), "only rabi_pairs axes take pairs")),
        (_, false, Some(values), None) => {
            if values.is_empty() {
                return Err(ConfigError::invalid(field("values"), "must not be empty"));
            }
            if values.len() > MAX_POINTS {
                return Err(ConfigError::invalid(field("values"), format!("more than {MAX_POINTS} values")));
            }
            AxisValues::Scalars(values)
        }
        (_, true, Some(_), None) => {
            return Err(ConfigError::invalid(field("values"), "give either values or start/stop/points, not both"))
        }
        (_, true, None, None) => {
            let start = raw.start.ok_or_else(|| ConfigError::invalid(field("start"), "missing"))?;
            let stop = raw.stop.ok_or_else(|| ConfigError::invalid(field("stop"), "missing"))?;
            let points = raw.points.ok_or_else(|| ConfigError::invalid(field("points"), "missing"))?;
            let range = RangeSpec::new(start, stop, points, raw.spacing.unwrap_or_default())
                .map_err(|e| ConfigError::invalid(field("points"), e.to_string()))?;
            AxisValues::Scalars(range.values())
        }
        (_, false, None, None) => {
            return Err(ConfigError::invalid(field("values"), "axis needs values or start/stop/points"))
        }
    };
    if let AxisValues::Scalars(v) = &values {
        for &x in v {
            check_axis_value(kind, &field("values"), x)?;
        }
    }
    Ok(Axis { kind, values })
}

/// Parses and validates a TOML sweep configuration.
pub fn parse_config(text: &str) -> Result<SweepConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    if raw.preset != PRESET_NAME {
        return Err(ConfigError::invalid(
            "preset",
            format!("unknown preset {:?}; available: {PRESET_NAME}", raw.preset),
        ));
    }
    let mut base = DiamondSetup::rb87();
    let p = raw.parameters;
    if let Some(v) = p.delta1 {
        base.delta1 = finite("parameters.delta1", v)?;
    }
    if let Some(v) = p.delta2 {
        base.delta2 = finite("parameters.delta2", v)?;
    }
    if let Some(v) = p.rabi01 {
        base.rabi01 = non_negative("parameters.rabi01", v)?;
    }
    if let Some(v) = p.rabi12 {
        base.rabi12 = non_negative("parameters.rabi12", v)?;
    }
    if let Some(v) = p.separation_nm {
        base.separation_nm = positive("parameters.separation_nm", v)?;
    }
    if let Some(v) = p.secular_threshold {
        base.secular_threshold = Some(positive("parameters.secular_threshold", v)?);
    }
    if let Some(mode) = p.couplings {
        if let CouplingMode::Only(list) = &mode {
            if let Some(t) = list.iter().find(|t| !RB87_TRANSITIONS.iter().any(|r| r.0 == **t)) {
                return Err(ConfigError::invalid(
                    "parameters.couplings",
                    format!("transition {t} is not part of the preset"),
                ));
            }
        }
        base.couplings = mode;
    }
    let power = match raw.power {
        Some(rp) => Some(PowerScaling {
            scale: rp.scale,
            reference_mw: positive("power.reference_mw", rp.reference_mw)?,
            reference_rabi12: match rp.reference_rabi12 {
                Some(v) => non_negative("power.reference_rabi12", v)?,
                None => base.rabi12,
            },
        }),
        None => None,
    };
    let axes = raw
        .sweep
        .into_iter()
        .enumerate()
        .map(|(i, a)| resolve_axis(i, a))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(workers) = raw.workers {
        if workers == 0 {
            return Err(ConfigError::invalid("workers", "must be at least 1"));
        }
    }
    let output = OutputConfig {
        dir: raw.output.dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        format: raw.output.format.unwrap_or_default(),
    };
    let config = SweepConfig {
        preset: raw.preset,
        base,
        axes,
        power,
        output,
        workers: raw.workers,
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SweepConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

impl SweepConfig {
    /// Preset defaults with no sweep axes.
    pub fn preset_defaults() -> Self {
        Self {
            preset: PRESET_NAME.to_string(),
            base: DiamondSetup::rb87(),
            axes: Vec::new(),
            power: None,
            output: OutputConfig::default(),
            workers: None,
        }
    }

    /// Cross-field checks: unique axes, power axes backed by a power
    /// convention, and a bounded point count.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (i, a) in self.axes.iter().enumerate() {
            if a.values.is_empty() {
                return Err(ConfigError::invalid(format!("sweep[{i}]"), "axis has no values"));
            }
            if self.axes[..i].iter().any(|b| b.kind == a.kind) {
                return Err(ConfigError::invalid(format!("sweep[{i}].axis"), format!("{} swept twice", a.kind.name())));
            }
        }
        let has = |k: AxisKind| self.axes.iter().any(|a| a.kind == k);
        if has(AxisKind::PowerMw) && self.power.is_none() {
            return Err(ConfigError::invalid("power", "power_mw axis needs a [power] section with scale = \"sqrt\""));
        }
        if has(AxisKind::RabiPairs) && (has(AxisKind::Rabi01) || has(AxisKind::Rabi12) || has(AxisKind::PowerMw)) {
            return Err(ConfigError::invalid("sweep", "rabi_pairs cannot be combined with rabi01, rabi12 or power_mw axes"));
        }
        if has(AxisKind::PowerMw) && has(AxisKind::Rabi12) {
            return Err(ConfigError::invalid("sweep", "power_mw and rabi12 both set rabi12"));
        }
        let mut total: usize = 1;
        for a in &self.axes {
            total = total.saturating_mul(a.values.len());
        }
        if total > MAX_POINTS {
            return Err(ConfigError::invalid("sweep", format!("{total} points exceed {MAX_POINTS}")));
        }
        Ok(())
    }

    /// Applies output-directory and worker overrides from `lookup` (normally
    /// the process environment).
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(dir) = lookup(OUTPUT_DIR_ENV).filter(|s| !s.is_empty()) {
            self.output.dir = PathBuf::from(dir);
        }
        if let Some(w) = lookup(WORKERS_ENV).filter(|s| !s.is_empty()) {
            let workers = w
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| ConfigError::invalid(WORKERS_ENV, format!("expected a positive integer, got {w:?}")))?;
            self.workers = Some(workers);
        }
        Ok(())
    }

    /// Replaces the axis of the same kind, or appends a new innermost axis.
    pub fn set_axis(&mut self, axis: Axis) -> Result<(), ConfigError> {
        match self.axes.iter_mut().find(|a| a.kind == axis.kind) {
            Some(slot) => *slot = axis,
            None => self.axes.push(axis),
        }
        self.validate()
    }

    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Sweep points in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<SweepPoint> {
        let total = self.point_count();
        (0..total)
            .map(|index| {
                let mut setup = self.base.clone();
                let mut coordinates = Vec::with_capacity(self.axes.len());
                let mut rest = index;
                let mut stride = total;
                for axis in &self.axes {
                    stride /= axis.values.len();
                    let k = rest / stride;
                    rest %= stride;
                    match &axis.values {
                        AxisValues::Scalars(v) => {
                            let x = v[k];
                            coordinates.push(x);
                            match axis.kind {
                                AxisKind::Delta1 => setup.delta1 = x,
                                AxisKind::Delta2 => setup.delta2 = x,
                                AxisKind::SeparationNm => setup.separation_nm = x,
                                AxisKind::Rabi01 => setup.rabi01 = x,
                                AxisKind::Rabi12 => setup.rabi12 = x,
                                AxisKind::PowerMw => {
                                    let scaling = self.power.expect("validated: power axis has a convention");
                                    setup.rabi12 = scaling.rabi12(x);
                                }
                                AxisKind::RabiPairs => unreachable!("validated: pairs axis holds pairs"),
                            }
                        }
                        AxisValues::Pairs(v) => {
                            let (a, b) = v[k];
                            coordinates.extend([a, b]);
                            setup.rabi01 = a;
                            setup.rabi12 = b;
                        }
                    }
                }
                SweepPoint {
                    index,
                    setup,
                    coordinates,
                }
            })
            .collect()
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
preset = "Rb87-diamond"

[[sweep]]
axis = "delta2"
start = -10.0
stop = 10.0
points = 201
"#;

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.base, DiamondSetup::rb87());
        assert_eq!(cfg.axes.len(), 1);
        assert_eq!(cfg.point_count(), 201);
        assert_eq!(cfg.output, OutputConfig::default());
        assert_eq!(cfg.workers, None);
        let pts = cfg.points();
        assert_eq!(pts[0].setup.delta2, -10.0);
        assert_eq!(pts[200].setup.delta2, 10.0);
        assert!((pts[100].setup.delta2).abs() < 1e-12);
    }

    #[test]
    fn zero_points_rejected() {
        let text = MINIMAL.replace("points = 201", "points = 0");
        assert!(matches!(parse_config(&text), Err(ConfigError::Invalid { field, .. }) if field == "sweep[0].points"));
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let text = format!("{MINIMAL}\n[parameters]\ndelta3 = 1.0\n");
        match parse_config(&text) {
            Err(ConfigError::Parse { line, message, .. }) => {
                assert!(line >= 9, "{line}");
                assert!(message.contains("delta3"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn couplings_off_toggle() {
        let text = format!("{MINIMAL}\n[parameters]\ncouplings = \"off\"\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.base.couplings, CouplingMode::Off);
        let t = cfg.base.couplings().unwrap();
        assert!(t.entries().all(|(k, v)| k.0 == k.1 || (v.shift == 0.0 && v.decay == 0.0)));
    }

    #[test]
    fn selective_couplings_must_exist() {
        let ok = "preset = \"Rb87-diamond\"\n[parameters]\ncouplings = { only = [{ lower = 3, upper = 2 }] }\n";
        assert!(matches!(parse_config(ok).unwrap().base.couplings, CouplingMode::Only(_)));
        let bad = ok.replace("lower = 3, upper = 2", "lower = 1, upper = 3");
        assert!(matches!(parse_config(&bad), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn wrong_preset_rejected() {
        assert!(matches!(
            parse_config("preset = \"Cs133\""),
            Err(ConfigError::Invalid { field, .. }) if field == "preset"
        ));
    }

    #[test]
    fn pairs_and_power_axes() {
        let text = r#"
preset = "Rb87-diamond"
[[sweep]]
axis = "rabi_pairs"
pairs = [[7.5, 6.3], [7.5, 8.9]]
[[sweep]]
axis = "delta2"
values = [-1.0, 0.0, 1.0]
"#;
        let cfg = parse_config(text).unwrap();
        let pts = cfg.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[4].coordinates, vec![7.5, 8.9, 0.0]);
        assert_eq!((pts[4].setup.rabi12, pts[4].setup.delta2), (8.9, 0.0));

        let power = r#"
preset = "Rb87-diamond"
[power]
scale = "sqrt"
reference_mw = 4.0
[[sweep]]
axis = "power_mw"
values = [1.0, 4.0, 16.0]
"#;
        let cfg = parse_config(power).unwrap();
        let r: Vec<f64> = cfg.points().iter().map(|p| p.setup.rabi12).collect();
        assert_eq!(r, vec![3.15, 6.3, 12.6]);
        let missing = power.replace("[power]\nscale = \"sqrt\"\nreference_mw = 4.0\n", "");
        assert!(matches!(parse_config(&missing), Err(ConfigError::Invalid { field, .. }) if field == "power"));
    }

    #[test]
    fn duplicate_and_conflicting_axes_rejected() {
        let dup = format!("{MINIMAL}{}", MINIMAL.replace("preset = \"Rb87-diamond\"\n", ""));
        assert!(parse_config(&dup).is_err());
        let mixed = "preset = \"Rb87-diamond\"\n[[sweep]]\naxis = \"delta2\"\nvalues = [0.0]\nstart = 1.0\n";
        assert!(parse_config(mixed).is_err());
    }

    #[test]
    fn non_physical_values_rejected() {
        let text = "preset = \"Rb87-diamond\"\n[[sweep]]\naxis = \"separation_nm\"\nvalues = [100.0, 0.0]\n";
        assert!(matches!(parse_config(text), Err(ConfigError::Invalid { .. })));
        let nan = "preset = \"Rb87-diamond\"\n[parameters]\ndelta1 = nan\n";
        assert!(matches!(parse_config(nan), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn env_overrides() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.apply_env(|k| match k {
            OUTPUT_DIR_ENV => Some("/tmp/x".into()),
            WORKERS_ENV => Some("3".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.output.dir, PathBuf::from("/tmp/x"));
        assert_eq!(cfg.workers, Some(3));
        assert!(cfg.apply_env(|k| (k == WORKERS_ENV).then(|| "0".into())).is_err());
    }

    #[test]
    fn range_spec_parsing() {
        let r: RangeSpec = "-10:10:201".parse().unwrap();
        assert_eq!((r.start, r.stop, r.points, r.spacing), (-10.0, 10.0, 201, Spacing::Linear));
        let l: RangeSpec = "60:2000:200:log".parse().unwrap();
        let v = l.values();
        assert_eq!((v[0], v[199]), (60.0, 2000.0));
        assert_eq!(l.to_string(), "60:2000:200:log");
        for bad in ["", "1:2", "1:2:3:4:5", "a:2:3", "1:2:x", "1:2:0", "0:2:3:log", "1:2:3:cubic", "inf:1:2", "1:2:1"] {
            assert!(bad.parse::<RangeSpec>().is_err(), "{bad}");
        }
        assert_eq!("5:5:1".parse::<RangeSpec>().unwrap().values(), vec![5.0]);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = parse_config(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.base.delta1 = -71.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn line_column_counts_from_one() {
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
        assert_eq!(line_column("ab", 0), (1, 1));
    }
}
