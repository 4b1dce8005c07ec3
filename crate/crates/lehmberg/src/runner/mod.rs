//! Sweep orchestration: configuration, concurrent per-point evaluation,
//! deterministic tables and the run manifest.

pub mod config;
pub mod pipeline;
pub mod table;
pub mod validate;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    load_config, parse_config, Axis, AxisKind, AxisValues, ConfigError, OutputConfig, OutputFormat, PowerScale,
    PowerScaling, RangeSpec, RangeSpecError, Spacing, SweepConfig, SweepPoint,
};
pub use pipeline::{channels, tracked_spectra, G2Evaluator, G2Point};
pub use table::{emit_table, format_float, render_table, Cell, Table};
pub use validate::{run_validation, Check};

use crate::observables::{dressed_decomposition, OperatorTag};
use crate::{Error, Result};

pub const G2_COLUMNS: [&str; 7] = ["delta2", "r12_nm", "lam01", "lam12", "G2", "Gpp", "Gpe"];
pub const SPECTRA_COLUMNS: [&str; 6] = ["sweep_value", "state_index", "energy", "symmetry", "label", "flagged"];
pub const ZETA_COLUMNS: [&str; 5] = ["sweep_value", "tag", "label", "symmetry", "zeta"];
pub const CHANNEL_COLUMNS: [&str; 4] = ["r12_nm", "transition", "gamma_plus", "gamma_minus"];
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Spectra,
    G2,
    Channels,
}

impl RunKind {
    pub fn name(self) -> &'static str {
        match self {
            RunKind::Spectra => "spectra",
            RunKind::G2 => "g2",
            RunKind::Channels => "channels",
        }
    }
}

impl fmt::Display for RunKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectra" => Ok(RunKind::Spectra),
            "g2" => Ok(RunKind::G2),
            "channels" => Ok(RunKind::Channels),
            _ => Err(Error::Config(format!("unknown run kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointStatus {
    Ok,
    Flagged,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub status: PointStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: RunKind,
    pub version: String,
    pub config_hash: String,
    pub points: Vec<PointRecord>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_ms: u64,
}

impl RunManifest {
    pub fn count(&self, status: PointStatus) -> usize {
        self.points.iter().filter(|p| p.status == status).count()
    }

    /// 0 when every point succeeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.count(PointStatus::Failed) > 0 {
            1
        } else {
            0
        }
    }
}

/// Tables produced by a run, before they are written.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub tables: Vec<(&'static str, Table)>,
    pub points: Vec<PointRecord>,
}

fn record(index: usize, status: PointStatus, message: Option<String>) -> PointRecord {
    PointRecord { index, status, message }
}

fn failed(index: usize, e: &Error) -> PointRecord {
    record(index, PointStatus::Failed, Some(e.to_string()))
}

fn compute_g2(points: &[SweepPoint]) -> Result<RunOutput> {
    let evaluator = G2Evaluator::new()?;
    let results: Vec<Result<G2Point>> = points.par_iter().map(|p| evaluator.evaluate(&p.setup)).collect();
    let mut table = Table::new(&G2_COLUMNS);
    let mut records = Vec::with_capacity(points.len());
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(g) => {
                let s = &g.setup;
                table.push(vec![
                    s.delta2.into(),
                    s.separation_nm.into(),
                    s.rabi01.into(),
                    s.rabi12.into(),
                    g.result.g2.into(),
                    g.result.population.into(),
                    g.result.exchange.into(),
                ])?;
                let status = if g.is_suspect() { PointStatus::Flagged } else { PointStatus::Ok };
                let message = g.is_suspect().then(|| {
                    format!(
                        "stale={} imaginary residue {:.3e}",
                        g.result.stale, g.result.imaginary_residue
                    )
                });
                records.push(record(p.index, status, message));
            }
            Err(e) => records.push(failed(p.index, &e)),
        }
    }
    Ok(RunOutput {
        tables: vec![("g2", table)],
        points: records,
    })
}

fn compute_spectra(config: &SweepConfig, points: &[SweepPoint]) -> Result<RunOutput> {
    let axis = match config.axes.as_slice() {
        [] => None,
        [a] if matches!(a.values, AxisValues::Scalars(_)) => Some(a.kind),
        _ => {
            return Err(Error::Config(
                "spectra sweeps take at most one scalar axis".into(),
            ))
        }
    };
    // Separation sweeps are tracked from the asymptotic end.
    let mut order: Vec<usize> = (0..points.len()).collect();
    if axis == Some(AxisKind::SeparationNm) {
        order.sort_by(|&a, &b| points[b].setup.separation_nm.total_cmp(&points[a].setup.separation_nm));
    }
    let setups: Vec<_> = order.iter().map(|&i| points[i].setup.clone()).collect();
    let mut spectra: Vec<Option<Result<_>>> = (0..points.len()).map(|_| None).collect();
    for (&i, s) in order.iter().zip(tracked_spectra(&setups)) {
        spectra[i] = Some(s);
    }
    let mut table = Table::new(&SPECTRA_COLUMNS);
    let mut zeta = Table::new(&ZETA_COLUMNS);
    let mut records = Vec::with_capacity(points.len());
    for (p, s) in points.iter().zip(spectra) {
        let value = p.coordinates.first().copied().unwrap_or(p.setup.separation_nm);
        let spectrum = match s.expect("every point evaluated") {
            Ok(s) => s,
            Err(e) => {
                records.push(failed(p.index, &e));
                continue;
            }
        };
        let decompositions = OperatorTag::ALL
            .iter()
            .map(|&tag| dressed_decomposition(tag, &spectrum))
            .collect::<Result<Vec<_>>>();
        let decompositions = match decompositions {
            Ok(d) => d,
            Err(e) => {
                records.push(failed(p.index, &e));
                continue;
            }
        };
        for k in 0..spectrum.len() {
            table.push(vec![
                value.into(),
                k.into(),
                spectrum.energies[k].into(),
                spectrum.symmetry[k].as_str().into(),
                spectrum.labels[k].clone().unwrap_or_default().into(),
                spectrum.flagged[k].into(),
            ])?;
        }
        for d in decompositions {
            for w in d.weights {
                zeta.push(vec![
                    value.into(),
                    d.tag.code().into(),
                    w.label.into(),
                    w.symmetry.as_str().into(),
                    w.zeta.into(),
                ])?;
            }
        }
        let flagged = spectrum.flagged.iter().filter(|&&f| f).count();
        records.push(if flagged > 0 {
            record(p.index, PointStatus::Flagged, Some(format!("{flagged} ambiguous labels")))
        } else {
            record(p.index, PointStatus::Ok, None)
        });
    }
    Ok(RunOutput {
        tables: vec![("spectra", table), ("zeta", zeta)],
        points: records,
    })
}

fn compute_channels(points: &[SweepPoint]) -> Result<RunOutput> {
    let results: Vec<_> = points.par_iter().map(|p| channels(&p.setup)).collect();
    let mut table = Table::new(&CHANNEL_COLUMNS);
    let mut records = Vec::with_capacity(points.len());
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(list) => {
                for ch in list {
                    table.push(vec![
                        p.setup.separation_nm.into(),
                        ch.transition.to_string().into(),
                        ch.superradiant_rate.into(),
                        ch.subradiant_rate.into(),
                    ])?;
                }
                records.push(record(p.index, PointStatus::Ok, None));
            }
            Err(e) => records.push(failed(p.index, &e)),
        }
    }
    Ok(RunOutput {
        tables: vec![("channels", table)],
        points: records,
    })
}

/// Evaluates every sweep point on a pool of `config.workers` threads. Rows
/// are ordered by sweep index regardless of completion order.
pub fn compute(config: &SweepConfig, kind: RunKind) -> Result<RunOutput> {
    config.validate().map_err(|e| Error::Config(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let points = config.points();
    pool.install(|| match kind {
        RunKind::G2 => compute_g2(&points),
        RunKind::Spectra => compute_spectra(config, &points),
        RunKind::Channels => compute_channels(&points),
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io(std::io::Error::other(e)))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io)
}

/// Runs the sweep and writes `<kind tables>.<ext>` plus `manifest.json` into
/// the configured output directory.
pub fn run_sweep(config: &SweepConfig, kind: RunKind) -> Result<RunManifest> {
    let started = Instant::now();
    let output = compute(config, kind)?;
    let dir = &config.output.dir;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut outputs = Vec::new();
    for (name, table) in &output.tables {
        let path = dir.join(format!("{name}.{}", config.output.format.extension()));
        emit_table(table, &path, config.output.format)?;
        outputs.push(path);
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    outputs.push(manifest_path.clone());
    let manifest = RunManifest {
        command: kind,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        points: output.points,
        outputs,
        wall_clock_ms: started.elapsed().as_millis() as u64,
    };
    write_json(&manifest_path, &manifest)?;
    Ok(manifest)
}
