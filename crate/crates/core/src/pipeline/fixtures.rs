//! Writes synthetic datasets in the ingested file formats, together with a
//! run configuration that references them.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::{
    BinningConfig, CalibrationConfig, InitialGuess, PowerGroupConfig, PowerSweepConfig, RunConfig, StrategyConfig,
    SweepEntry, TemperatureConfig, TemperatureGroupConfig, TemperatureResonatorConfig,
};
use super::envelope::BinAxis;
use super::io::{write_sweep_csv, write_temperature_series, write_touchstone, Encoding, FileFormat};
use crate::error::{Error, Result};
use crate::synth::{
    power_sweep_fixture, resonator_family, temperature_fixture, PowerSweepFixture, SweepShape, TemperatureFixture,
};
use crate::types::TempModelParams;
use crate::units::microev_to_joules;

pub const CONFIG_FILE: &str = "config.toml";

/// A power-sweep fixture assigned to a binning group.
#[derive(Debug, Clone)]
pub struct PowerGroupData {
    pub name: String,
    pub binning: Option<BinningConfig>,
    pub fixture: PowerSweepFixture,
}

/// A temperature fixture fitted with one strategy.
#[derive(Debug, Clone)]
pub struct TemperatureGroupData {
    pub name: String,
    pub strategy: StrategyConfig,
    pub initial: InitialGuess,
    pub fixture: TemperatureFixture,
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

/// Writes one file per sweep under `dir/sweeps` and returns the entries.
/// CSV files carry the drive power in a column; Touchstone entries carry it
/// in the configuration.
pub fn write_power_sweeps(dir: &Path, groups: &[PowerGroupData], format: FileFormat) -> Result<Vec<SweepEntry>> {
    let sub = dir.join("sweeps");
    create_dir(&sub)?;
    let mut entries = Vec::new();
    for g in groups {
        for (i, s) in g.fixture.sweeps.iter().enumerate() {
            let k = g.fixture.sweeps[..i]
                .iter()
                .filter(|o| o.resonator == s.resonator)
                .count();
            let (name, drive) = match format {
                FileFormat::Csv => (format!("{}_p{k:02}.csv", s.resonator), None),
                FileFormat::Touchstone => (format!("{}_p{k:02}.s2p", s.resonator), Some(s.drive_dbm)),
            };
            let rel = PathBuf::from("sweeps").join(&name);
            match format {
                FileFormat::Csv => write_sweep_csv(&dir.join(&rel), &s.sweep, Encoding::RealImag)?,
                FileFormat::Touchstone => write_touchstone(&dir.join(&rel), &s.sweep, Encoding::RealImag)?,
            }
            entries.push(SweepEntry {
                resonator: s.resonator.clone(),
                group: g.name.clone(),
                path: rel,
                drive_dbm: drive,
                format: None,
            });
        }
    }
    Ok(entries)
}

/// Writes one `temperature_k,freq_hz` file per member under `dir/series`.
pub fn write_temperature_series_files(dir: &Path, groups: &[TemperatureGroupData]) -> Result<TemperatureConfig> {
    let sub = dir.join("series");
    create_dir(&sub)?;
    let mut resonators = Vec::new();
    for g in groups {
        for m in &g.fixture.members {
            let rel = PathBuf::from("series").join(format!("{}.csv", m.name));
            write_temperature_series(&dir.join(&rel), &m.series)?;
            resonators.push(TemperatureResonatorConfig {
                name: m.name.clone(),
                group: g.name.clone(),
                series: Some(rel),
                sweeps: Vec::new(),
            });
        }
    }
    Ok(TemperatureConfig {
        groups: groups
            .iter()
            .map(|g| TemperatureGroupConfig {
                name: g.name.clone(),
                strategy: g.strategy.clone(),
                initial: g.initial,
            })
            .collect(),
        resonators,
    })
}

/// Writes all data files plus `config.toml` into `dir` and returns the
/// configuration path. Power groups must share one input attenuation.
pub fn write_dataset(
    dir: &Path,
    power: &[PowerGroupData],
    temperature: &[TemperatureGroupData],
    format: FileFormat,
) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut cfg = RunConfig {
        output_dir: Some(PathBuf::from("out")),
        ..RunConfig::default()
    };
    cfg.input.format = format;
    if !power.is_empty() {
        let atten = power[0].fixture.input_attenuation_db;
        if power.iter().any(|g| g.fixture.input_attenuation_db != atten) {
            return Err(Error::invalid("power groups use different input attenuations"));
        }
        cfg.calibration = Some(CalibrationConfig::Attenuation {
            input_attenuation_db: atten,
        });
        cfg.power_sweep = Some(PowerSweepConfig {
            groups: power
                .iter()
                .map(|g| PowerGroupConfig {
                    name: g.name.clone(),
                    binning: g.binning,
                })
                .collect(),
            sweeps: write_power_sweeps(dir, power, format)?,
        });
    }
    if !temperature.is_empty() {
        cfg.temperature = Some(write_temperature_series_files(dir, temperature)?);
    }
    let text = toml::to_string(&cfg).map_err(|e| Error::invalid(format!("config serialization: {e}")))?;
    let path = dir.join(CONFIG_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Input attenuation of the standard power-sweep datasets.
pub const STANDARD_ATTENUATION_DB: f64 = 60.0;

/// Drive powers spanning roughly 0.1 to 1e5 photons for the standard
/// resonator families.
pub fn standard_drive_powers(count: usize) -> Vec<f64> {
    let (lo, hi) = (-80.0, -20.0);
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count.max(2) - 1) as f64)
        .collect()
}

/// Power-sweep group of `count` resonators with `powers` drive levels each.
pub fn standard_power_group(
    name: &str,
    count: usize,
    powers: usize,
    bins: usize,
    f_start: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<PowerGroupData> {
    let family = resonator_family(&format!("{name}-"), count, f_start, 3000.0, seed);
    let shape = SweepShape {
        noise_sigma,
        ..SweepShape::default()
    };
    let fixture = power_sweep_fixture(
        &family,
        &standard_drive_powers(powers),
        STANDARD_ATTENUATION_DB,
        shape,
        seed.wrapping_add(1),
    )?;
    Ok(PowerGroupData {
        name: name.into(),
        binning: Some(BinningConfig {
            bins,
            axis: BinAxis::Log10,
        }),
        fixture,
    })
}

/// Drive levels per resonator in the standard dataset; dense enough that
/// every envelope bin between the extremes is occupied.
pub const STANDARD_POWER_STEPS: usize = 25;

/// Temperatures from 50 to 700 mK in 50 mK steps.
pub fn standard_temperatures() -> Vec<f64> {
    (1..=14).map(|k| 0.05 * k as f64).collect()
}

/// Granular-aluminium parameters: `F tan(delta)` 5.9e-4, gap 351 ueV,
/// kinetic fraction 0.999.
pub fn granular_aluminium_truth(f0: f64) -> Result<TempModelParams> {
    TempModelParams::new(5.9e-4, microev_to_joules(351.0)?, 0.999, f0)
}

/// Aluminium parameters: `F tan(delta)` 2.5e-4, gap 210 ueV, kinetic
/// fraction 0.6.
pub fn aluminium_truth(f0: f64) -> Result<TempModelParams> {
    TempModelParams::new(2.5e-4, microev_to_joules(210.0)?, 0.6, f0)
}

/// The power-sweep layout used for envelope plots: 11 granular-aluminium
/// curves in 21 bins and 10 aluminium curves in 20 bins; plus temperature
/// series for 7 and 6 resonators of the two materials.
pub fn standard_dataset(dir: &Path, format: FileFormat, seed: u64) -> Result<PathBuf> {
    let power = vec![
        standard_power_group("grAl", 11, STANDARD_POWER_STEPS, 21, 4.5e9, 1e-3, seed)?,
        standard_power_group("Al", 10, STANDARD_POWER_STEPS, 20, 6.5e9, 1e-3, seed.wrapping_add(100))?,
    ];
    let temps = standard_temperatures();
    let gral = temperature_fixture("grAl-T", &granular_aluminium_truth(5e9)?, 7, 0.005, &temps, 1e-8, seed)?;
    let al = temperature_fixture(
        "Al-T",
        &aluminium_truth(8e9)?,
        6,
        0.005,
        &temps,
        1e-8,
        seed.wrapping_add(7),
    )?;
    let temperature = vec![
        TemperatureGroupData {
            name: "grAl".into(),
            strategy: StrategyConfig::FixAlpha { alpha: 0.999 },
            initial: InitialGuess::default(),
            fixture: gral,
        },
        TemperatureGroupData {
            name: "Al".into(),
            strategy: StrategyConfig::FixDeltaSweep {
                delta_0_uev: vec![190.0, 210.0, 230.0],
            },
            initial: InitialGuess::default(),
            fixture: al,
        },
    ];
    write_dataset(dir, &power, &temperature, format)
}
