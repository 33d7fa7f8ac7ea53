//! Structured run report and plot-ready delimited files.
//!
//! Reports carry no timestamps, so identical inputs give byte-identical
//! output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::power::PowerSweepReport;
use super::study::TemperatureReport;
use crate::error::{Error, Result};

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.toml";
pub const POWER_POINTS_FILE: &str = "power_points.csv";
pub const TEMPERATURE_CURVES_FILE: &str = "temperature_curves.csv";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub label: String,
    pub dielectric: String,
    pub tan_delta: f64,
    /// 1 is the lowest loss.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossComparison {
    pub measured_tan_delta: f64,
    /// Literature rows in their published order, then the measured row.
    pub rows: Vec<LossRow>,
}

impl LossComparison {
    /// Labels ordered from lowest to highest loss.
    pub fn ranking(&self) -> Vec<&str> {
        let mut rows: Vec<&LossRow> = self.rows.iter().collect();
        rows.sort_by_key(|r| r.rank);
        rows.into_iter().map(|r| r.label.as_str()).collect()
    }
}

/// Loss tangents of parallel-plate amplifier implementations.
pub const LITERATURE_LOSS: [(&str, &str, f64); 4] = [
    ("literature A", "50 nm SiO2", 5e-4),
    ("literature B", "30 nm Al2O3", 6.5e-3),
    ("literature C", "200 nm aSi:H", 3.6e-5),
    ("vacuum-gap reference", "80 nm vacuum", 3e-4),
];

pub const MEASURED_LABEL: &str = "measured";

/// Ties keep table order, so a measured value equal to a reference row
/// ranks right after it.
pub fn loss_comparison(measured_tan_delta: f64) -> LossComparison {
    let mut rows: Vec<LossRow> = LITERATURE_LOSS
        .iter()
        .map(|&(label, dielectric, tan_delta)| LossRow {
            label: label.into(),
            dielectric: dielectric.into(),
            tan_delta,
            rank: 0,
        })
        .collect();
    rows.push(LossRow {
        label: MEASURED_LABEL.into(),
        dielectric: "80 nm vacuum".into(),
        tan_delta: measured_tan_delta,
        rank: 0,
    });
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].tan_delta.total_cmp(&rows[b].tan_delta).then(a.cmp(&b)));
    for (rank, &i) in order.iter().enumerate() {
        rows[i].rank = rank + 1;
    }
    LossComparison {
        measured_tan_delta,
        rows,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub inputs: Vec<InputHash>,
}

impl Provenance {
    /// Hashes every input file named in the configuration, sorted by path.
    /// Paths are recorded as written in the configuration.
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let mut paths: Vec<&Path> = Vec::new();
        if let Some(ps) = &cfg.power_sweep {
            paths.extend(ps.sweeps.iter().map(|s| s.path.as_path()));
        }
        if let Some(t) = &cfg.temperature {
            for r in &t.resonators {
                paths.extend(r.series.as_deref());
                paths.extend(r.sweeps.iter().map(|s| s.path.as_path()));
            }
        }
        paths.sort();
        paths.dedup();
        let inputs = paths
            .into_iter()
            .map(|p| {
                let full = cfg.resolve(p);
                let bytes = fs::read(&full).map_err(|e| Error::io(&full, e))?;
                Ok(InputHash {
                    path: p.display().to_string(),
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config_sha256: cfg.config_sha256.clone(),
            inputs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub format_version: u32,
    pub status: String,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_sweep: Option<PowerSweepReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<TemperatureReport>,
}

pub const STATUS_OK: &str = "ok";
pub const STATUS_NO_FITS: &str = "no fits";

impl Report {
    pub fn new(
        provenance: Provenance,
        power_sweep: Option<PowerSweepReport>,
        temperature: Option<TemperatureReport>,
    ) -> Self {
        let fits =
            power_sweep.as_ref().map_or(0, |p| p.fit_count) + temperature.as_ref().map_or(0, |t| t.resonators.len());
        Self {
            format_version: REPORT_FORMAT_VERSION,
            status: if fits > 0 { STATUS_OK } else { STATUS_NO_FITS }.into(),
            provenance,
            power_sweep,
            temperature,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("report serialization: {e}")))
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("{}: {other:?}", path.display())),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// File-name-safe form of a group name.
fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_power_files(dir: &Path, ps: &PowerSweepReport, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(POWER_POINTS_FILE);
    let mut w = csv_writer(&path)?;
    let header = [
        "group",
        "resonator",
        "path",
        "drive_dbm",
        "incident_power_w",
        "n_bar",
        "f_r",
        "q_l",
        "q_c_mag",
        "phi",
        "q_int",
    ];
    w.write_record(header).map_err(|e| csv_error(&path, e))?;
    for r in &ps.fits {
        w.write_record([
            r.group.clone(),
            r.resonator.clone(),
            r.path.clone(),
            r.drive_dbm.to_string(),
            r.incident_power_w.to_string(),
            r.n_bar.to_string(),
            r.f_r.to_string(),
            r.q_l.to_string(),
            r.q_c_mag.to_string(),
            r.phi.to_string(),
            r.q_int.to_string(),
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    for g in &ps.envelopes {
        let path = dir.join(format!("envelope_{}.csv", slug(&g.group)));
        let mut w = csv_writer(&path)?;
        w.write_record([
            "bin_center",
            "n_bar_center",
            "count",
            "empty",
            "q_int_mean",
            "q_int_min",
            "q_int_max",
        ])
        .map_err(|e| csv_error(&path, e))?;
        for b in g.envelope.bins() {
            let n_center = match g.axis {
                super::envelope::BinAxis::Linear => b.center,
                super::envelope::BinAxis::Log10 => 10f64.powf(b.center),
            };
            w.write_record([
                b.center.to_string(),
                n_center.to_string(),
                b.count.to_string(),
                (b.count == 0).to_string(),
                opt(b.mean),
                opt(b.min),
                opt(b.max),
            ])
            .map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(())
}

fn write_temperature_files(dir: &Path, t: &TemperatureReport, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(TEMPERATURE_CURVES_FILE);
    let mut w = csv_writer(&path)?;
    w.write_record(["group", "resonator", "temperature_k", "measured_shift", "model_shift"])
        .map_err(|e| csv_error(&path, e))?;
    for c in &t.curves {
        w.write_record([
            c.group.clone(),
            c.resonator.clone(),
            c.temperature_k.to_string(),
            c.measured_shift.to_string(),
            c.model_shift.to_string(),
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the report and its plot files into `dir`, creating it if needed.
/// Returns the written paths.
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let path = dir.join(REPORT_FILE);
    fs::write(&path, report.to_toml()?).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    if let Some(ps) = &report.power_sweep {
        write_power_files(dir, ps, &mut written)?;
    }
    if let Some(t) = &report.temperature {
        write_temperature_files(dir, t, &mut written)?;
    }
    Ok(written)
}
