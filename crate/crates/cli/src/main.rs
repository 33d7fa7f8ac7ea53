use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use resokit::calibration::{incident_power, y_factor_with, NoiseModel, YFactorData, YFactorResult};
use resokit::microstrip::{LineSummary, MicrostripGeometry};
use resokit::notch::fit_notch;
use resokit::pipeline::config::CalibrationConfig;
use resokit::pipeline::fixtures::standard_dataset;
use resokit::pipeline::{load_sweep, run, FileFormat, RunConfig, RunKind};
use resokit::{Error, NotchFit};

const EXIT_RUN_ERROR: u8 = 1;
const EXIT_CONFIG_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "resokit", version, about = "Superconducting resonator characterization")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the environment and the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for synthetic data.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Input or output sweep format: csv or touchstone.
    #[arg(long, global = true)]
    format: Option<FileFormat>,
    /// Log verbosity: repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the resonance in each sweep file and print the parameters.
    Fit { files: Vec<PathBuf> },
    /// Fit a power sweep, convert to photon number and bin the envelopes.
    PowerSweep,
    /// Fit frequency-versus-temperature series per material group.
    TempStudy,
    /// Write a synthetic dataset and a matching configuration.
    Synth,
    /// Inductance, capacitance and quarter-wave resonance of a microstrip.
    Geometry(GeometryArgs),
    /// Chain gain and noise temperature from a Y-factor measurement.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct GeometryArgs {
    /// Gap height, m.
    #[arg(long, default_value_t = 80e-9)]
    h: f64,
    /// Strip width, m.
    #[arg(long, default_value_t = 4e-6)]
    w: f64,
    /// Resonator length, m.
    #[arg(long, default_value_t = 1e-3)]
    length: f64,
    /// Sheet kinetic inductance, H per square.
    #[arg(long, default_value_t = 0.0)]
    sheet_inductance: f64,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Hot-load output power, W.
    #[arg(long)]
    p_hot: Option<f64>,
    /// Cold-load output power, W.
    #[arg(long)]
    p_cold: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    t_hot: f64,
    #[arg(long, default_value_t = 0.02)]
    t_cold: f64,
    /// Measurement bandwidth, Hz.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Use the quantum noise model at this frequency, Hz.
    #[arg(long)]
    planck_frequency: Option<f64>,
    /// With an attenuation calibration, also report the incident power at
    /// this drive level, dBm.
    #[arg(long)]
    drive_dbm: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Run(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn print_toml<T: Serialize>(value: &T) -> CliResult<()> {
    let text = toml::to_string(value).map_err(|e| CliError::Run(e.to_string()))?;
    print!("{text}");
    Ok(())
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(f) = cli.format {
        cfg.input.format = f;
    }
    Ok(cfg)
}

fn output_dir(cli: &Cli, cfg: &RunConfig) -> CliResult<PathBuf> {
    cfg.output_dir(cli.out.as_deref())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))
}

fn format_for(path: &Path, explicit: Option<FileFormat>) -> FileFormat {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("s2p") => FileFormat::Touchstone,
        _ => FileFormat::Csv,
    })
}

#[derive(Serialize)]
struct FitRecord {
    path: String,
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    drive_dbm: Option<f64>,
    #[serde(flatten)]
    fit: NotchFit,
}

#[derive(Serialize)]
struct FitFailureRecord {
    path: String,
    error: String,
}

#[derive(Serialize)]
struct FitOutput {
    fit: Vec<FitRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failure: Vec<FitFailureRecord>,
}

fn cmd_fit(cli: &Cli, files: &[PathBuf]) -> CliResult<()> {
    if files.is_empty() {
        return Err(CliError::Config("fit needs at least one sweep file".into()));
    }
    let mut out = FitOutput {
        fit: Vec::new(),
        failure: Vec::new(),
    };
    let mut total = 0;
    for path in files {
        let sweeps = match load_sweep(path, format_for(path, cli.format)) {
            Ok(s) => s,
            Err(e) => {
                total += 1;
                out.failure.push(FitFailureRecord {
                    path: path.display().to_string(),
                    error: e.to_string(),
                });
                continue;
            }
        };
        for (index, s) in sweeps.iter().enumerate() {
            total += 1;
            match fit_notch(s) {
                Ok(fit) => out.fit.push(FitRecord {
                    path: path.display().to_string(),
                    index,
                    drive_dbm: s.drive_power_dbm(),
                    fit,
                }),
                Err(e) => out.failure.push(FitFailureRecord {
                    path: path.display().to_string(),
                    error: e.to_string(),
                }),
            }
        }
    }
    print_toml(&out)?;
    if 2 * out.failure.len() > total {
        return Err(Error::RunFailed {
            failed: out.failure.len(),
            total,
        }
        .into());
    }
    Ok(())
}

fn cmd_run(cli: &Cli, kind: RunKind) -> CliResult<()> {
    let cfg = load_config(cli)?;
    let dir = output_dir(cli, &cfg)?;
    let outcome = run(&cfg, kind, &dir)?;
    println!("status: {}", outcome.report.status);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_synth(cli: &Cli) -> CliResult<()> {
    let dir = cli
        .out
        .clone()
        .ok_or_else(|| CliError::Config("synth needs --out".into()))?;
    let path = standard_dataset(&dir, cli.format.unwrap_or_default(), cli.seed)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct GeometryOutput {
    geometry: MicrostripGeometry,
    line: LineSummary,
}

fn cmd_geometry(a: &GeometryArgs) -> CliResult<()> {
    let geometry = MicrostripGeometry::new(a.h, a.w, a.length, a.sheet_inductance)?;
    if let Some(w) = geometry.warning() {
        eprintln!("warning: {w:?}");
    }
    print_toml(&GeometryOutput {
        line: geometry.summary()?,
        geometry,
    })
}

#[derive(Serialize)]
struct CalibrationOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    y_factor: Option<YFactorResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_attenuation_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    incident_power_w: Option<f64>,
}

fn cmd_calibrate(cli: &Cli, a: &CalibrateArgs) -> CliResult<()> {
    let noise = |f: Option<f64>| f.map_or(NoiseModel::Classical, |frequency| NoiseModel::Planck { frequency });
    if let (Some(p_hot), Some(p_cold), Some(bandwidth)) = (a.p_hot, a.p_cold, a.bandwidth) {
        let data = YFactorData {
            p_hot,
            p_cold,
            t_hot: a.t_hot,
            t_cold: a.t_cold,
            bandwidth,
        };
        let r = y_factor_with(&data, noise(a.planck_frequency))?;
        return print_toml(&CalibrationOutput {
            y_factor: Some(r),
            input_attenuation_db: None,
            incident_power_w: None,
        });
    }
    if a.p_hot.is_some() || a.p_cold.is_some() || a.bandwidth.is_some() {
        return Err(CliError::Config(
            "Y-factor needs --p-hot, --p-cold and --bandwidth".into(),
        ));
    }
    let cfg = load_config(cli)?;
    match &cfg.calibration {
        Some(CalibrationConfig::OutputGain { y_factor: Some(y), .. }) => {
            let r = y_factor_with(&y.data(), y.noise_model())?;
            print_toml(&CalibrationOutput {
                y_factor: Some(r),
                input_attenuation_db: None,
                incident_power_w: None,
            })
        }
        Some(CalibrationConfig::Attenuation { input_attenuation_db }) => print_toml(&CalibrationOutput {
            y_factor: None,
            input_attenuation_db: Some(*input_attenuation_db),
            incident_power_w: a
                .drive_dbm
                .map(|d| incident_power(d, *input_attenuation_db))
                .transpose()?,
        }),
        Some(CalibrationConfig::OutputGain { .. }) | None => Err(CliError::Config(
            "configuration has no Y-factor or attenuation calibration".into(),
        )),
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Fit { files } => cmd_fit(cli, files),
        Command::PowerSweep => cmd_run(cli, RunKind::PowerSweep),
        Command::TempStudy => cmd_run(cli, RunKind::Temperature),
        Command::Synth => cmd_synth(cli),
        Command::Geometry(a) => cmd_geometry(a),
        Command::Calibrate(a) => cmd_calibrate(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG_ERROR)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUN_ERROR)
        }
    }
}
