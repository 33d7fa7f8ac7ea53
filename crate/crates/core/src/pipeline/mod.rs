//! Batch runs over measurement files: ingestion, fitting, binning and
//! reporting.

pub mod config;
pub mod envelope;
pub mod fixtures;
pub mod io;
pub mod power;
pub mod report;
pub mod study;

use std::path::{Path, PathBuf};

pub use config::{RunConfig, OUTPUT_DIR_ENV};
pub use envelope::{bin_envelope, BinAxis, EnvelopeCurve};
pub use io::{load_sweep, FileFormat};
pub use power::{run_power_sweep, PowerSweepReport};
pub use report::{loss_comparison, write_report, LossComparison, Provenance, Report};
pub use study::{format_uncertainty, run_temperature_study, TemperatureReport};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    PowerSweep,
    Temperature,
    /// Every section present in the configuration.
    All,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Runs the requested analyses and writes the report into `out_dir`.
pub fn run(cfg: &RunConfig, kind: RunKind, out_dir: &Path) -> Result<RunOutcome> {
    let want_power = matches!(kind, RunKind::PowerSweep) || (kind == RunKind::All && cfg.power_sweep.is_some());
    let want_temp = matches!(kind, RunKind::Temperature) || (kind == RunKind::All && cfg.temperature.is_some());
    if kind == RunKind::All && !want_power && !want_temp {
        return Err(Error::Config(
            "configuration has neither [power_sweep] nor [temperature]".into(),
        ));
    }
    let power = want_power.then(|| run_power_sweep(cfg)).transpose()?;
    let temperature = want_temp.then(|| run_temperature_study(cfg)).transpose()?;
    let report = Report::new(Provenance::from_config(cfg)?, power, temperature);
    let files = write_report(&report, out_dir)?;
    Ok(RunOutcome { report, files })
}
