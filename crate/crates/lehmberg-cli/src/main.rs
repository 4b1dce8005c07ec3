use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lehmberg::runner::{
    self, load_config, Axis, AxisKind, AxisValues, ConfigError, OutputFormat, PointStatus, PowerScale, PowerScaling,
    RangeSpec, RunKind, SweepConfig,
};
use lehmberg::system_model::CouplingMode;
use lehmberg::Error;

const EXIT_FAILED_POINTS: u8 = 1;
const EXIT_INVALID_CONFIG: u8 = 2;

/// Collective dressed states, decay channels and photon coincidences of
/// dipole-coupled diamond-scheme emitters.
#[derive(Parser, Debug)]
#[command(name = "lehmberg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Labeled collective dressed energies (and dressed weights) along one axis.
    Spectra(RunArgs),
    /// Stationary two-photon coincidences.
    G2(RunArgs),
    /// Super- and subradiant decay rates per transition.
    Channels(RunArgs),
    /// Run the invariant suite on the preset.
    Validate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PowerScaleArg {
    Sqrt,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML sweep configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory (overrides LEHMBERG_OUTPUT_DIR and the config).
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    /// Worker threads (overrides LEHMBERG_WORKERS and the config).
    #[arg(short = 'j', long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Sweep axis as AXIS=START:STOP:POINTS[:log]; repeatable, outermost first.
    #[arg(long = "sweep", value_name = "AXIS=RANGE", value_parser = parse_sweep)]
    sweeps: Vec<(AxisKind, RangeSpec)>,
    /// (rabi01, rabi12) pair as A,B; repeatable, forms a rabi_pairs axis.
    #[arg(long = "rabi-pair", value_name = "A,B", value_parser = parse_pair)]
    rabi_pairs: Vec<(f64, f64)>,
    #[arg(long, allow_hyphen_values = true)]
    delta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta2: Option<f64>,
    #[arg(long)]
    rabi01: Option<f64>,
    #[arg(long)]
    rabi12: Option<f64>,
    /// Emitter separation in nm.
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long, value_enum)]
    couplings: Option<Toggle>,
    #[arg(long)]
    secular_threshold: Option<f64>,
    /// Convention mapping a power_mw axis onto rabi12.
    #[arg(long, value_enum)]
    power_scale: Option<PowerScaleArg>,
    /// Power (mW) at which rabi12 equals its configured value.
    #[arg(long, default_value_t = 1.0, requires = "power_scale")]
    reference_power: f64,
}

fn axis_kind(name: &str) -> Option<AxisKind> {
    [
        AxisKind::Delta1,
        AxisKind::Delta2,
        AxisKind::SeparationNm,
        AxisKind::Rabi01,
        AxisKind::Rabi12,
        AxisKind::PowerMw,
    ]
    .into_iter()
    .find(|k| k.name() == name || (name == "separation" && *k == AxisKind::SeparationNm))
}

fn parse_sweep(s: &str) -> Result<(AxisKind, RangeSpec), String> {
    let (name, range) = s.split_once('=').ok_or_else(|| format!("expected AXIS=RANGE, got {s:?}"))?;
    let kind = axis_kind(name.trim()).ok_or_else(|| format!("unknown sweep axis {name:?}"))?;
    let range = range.parse::<RangeSpec>().map_err(|e| e.to_string())?;
    Ok((kind, range))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected A,B, got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("not a number: {v:?}"));
    Ok((num(a)?, num(b)?))
}

fn default_axis(kind: RunKind) -> Axis {
    let range = match kind {
        RunKind::G2 => ("delta2", "-10:10:201"),
        RunKind::Spectra | RunKind::Channels => ("separation_nm", "60:2000:200:log"),
    };
    let (kind, spec) = parse_sweep(&format!("{}={}", range.0, range.1)).expect("default sweep parses");
    Axis::scalars(kind, spec.values())
}

fn resolve(args: &RunArgs, kind: RunKind) -> Result<SweepConfig, ConfigError> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => SweepConfig::preset_defaults(),
    };
    config.apply_env(|k| std::env::var(k).ok())?;
    if let Some(dir) = &args.output_dir {
        config.output.dir = dir.clone();
    }
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(ConfigError::Invalid {
                field: "--workers".into(),
                message: "must be at least 1".into(),
            });
        }
        config.workers = Some(w);
    }
    if let Some(f) = args.format {
        config.output.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Jsonl => OutputFormat::Jsonl,
        };
    }
    let base = &mut config.base;
    let fixed = [
        (args.delta1, &mut base.delta1),
        (args.delta2, &mut base.delta2),
        (args.rabi01, &mut base.rabi01),
        (args.rabi12, &mut base.rabi12),
        (args.separation, &mut base.separation_nm),
    ];
    for (value, slot) in fixed {
        if let Some(v) = value {
            *slot = v;
        }
    }
    if let Some(t) = args.secular_threshold {
        base.secular_threshold = Some(t);
    }
    if let Some(t) = args.couplings {
        base.couplings = match t {
            Toggle::On => CouplingMode::On,
            Toggle::Off => CouplingMode::Off,
        };
    }
    if let Some(PowerScaleArg::Sqrt) = args.power_scale {
        config.power = Some(PowerScaling {
            scale: PowerScale::Sqrt,
            reference_mw: args.reference_power,
            reference_rabi12: config.base.rabi12,
        });
    }
    for &(kind, range) in &args.sweeps {
        config.set_axis(Axis::scalars(kind, range.values()))?;
    }
    if !args.rabi_pairs.is_empty() {
        config.set_axis(Axis {
            kind: AxisKind::RabiPairs,
            values: AxisValues::Pairs(args.rabi_pairs.clone()),
        })?;
    }
    if config.axes.is_empty() {
        config.axes.push(default_axis(kind));
    }
    check_fixed(&config)?;
    config.validate()?;
    Ok(config)
}

fn check_fixed(config: &SweepConfig) -> Result<(), ConfigError> {
    let b = &config.base;
    let invalid = |field: &str, v: f64| ConfigError::Invalid {
        field: field.into(),
        message: format!("out of range: {v}"),
    };
    if !b.delta1.is_finite() {
        return Err(invalid("delta1", b.delta1));
    }
    if !b.delta2.is_finite() {
        return Err(invalid("delta2", b.delta2));
    }
    for (name, v) in [("rabi01", b.rabi01), ("rabi12", b.rabi12)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid(name, v));
        }
    }
    if !(b.separation_nm.is_finite() && b.separation_nm > 0.0) {
        return Err(invalid("separation", b.separation_nm));
    }
    if let Some(t) = b.secular_threshold.filter(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(invalid("secular_threshold", t));
    }
    if let Some(p) = config.power.filter(|p| !(p.reference_mw.is_finite() && p.reference_mw > 0.0)) {
        return Err(invalid("reference_power", p.reference_mw));
    }
    Ok(())
}

fn run(args: &RunArgs, kind: RunKind) -> ExitCode {
    let config = match resolve(args, kind) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID_CONFIG);
        }
    };
    match runner::run_sweep(&config, kind) {
        Ok(manifest) => {
            eprintln!(
                "{kind}: {} points ({} ok, {} flagged, {} failed) in {} ms; outputs in {}",
                manifest.points.len(),
                manifest.count(PointStatus::Ok),
                manifest.count(PointStatus::Flagged),
                manifest.count(PointStatus::Failed),
                manifest.wall_clock_ms,
                config.output.dir.display()
            );
            for p in manifest.points.iter().filter(|p| p.status == PointStatus::Failed) {
                eprintln!("point {} failed: {}", p.index, p.message.as_deref().unwrap_or(""));
            }
            ExitCode::from(manifest.exit_code() as u8)
        }
        Err(Error::Config(message)) => {
            eprintln!("error: invalid configuration: {message}");
            ExitCode::from(EXIT_INVALID_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILED_POINTS)
        }
    }
}

fn validate() -> ExitCode {
    let checks = runner::run_validation();
    for c in &checks {
        println!(
            "{} {} ({} ms): {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.elapsed_ms,
            c.detail
        );
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED_POINTS)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Spectra(args) => run(args, RunKind::Spectra),
        Command::G2(args) => run(args, RunKind::G2),
        Command::Channels(args) => run(args, RunKind::Channels),
        Command::Validate => validate(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_flag_parsing() {
        let (k, r) = parse_sweep("delta2=-10:10:201").unwrap();
        assert_eq!((k, r.points), (AxisKind::Delta2, 201));
        assert_eq!(parse_sweep("separation=60:2000:5:log").unwrap().0, AxisKind::SeparationNm);
        assert!(parse_sweep("rabi_pairs=1:2:3").is_err());
        assert!(parse_sweep("delta2").is_err());
        assert!(parse_sweep("delta2=1:2").is_err());
    }

    #[test]
    fn pair_parsing() {
        assert_eq!(parse_pair("7.5, 6.3").unwrap(), (7.5, 6.3));
        assert!(parse_pair("7.5").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
