//! Run configuration, read from TOML. Relative paths are resolved against
//! the directory holding the configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::envelope::BinAxis;
use super::io::FileFormat;
use crate::calibration::{y_factor_with, NoiseModel, YFactorData};
use crate::error::{Error, Result};
use crate::temperature::FitStrategy;
use crate::types::TempModelParams;
use crate::units::microev_to_joules;

/// Environment variable overriding the output directory.
pub const OUTPUT_DIR_ENV: &str = "RESOKIT_OUT_DIR";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub input: InputConfig,
    #[serde(default)]
    pub calibration: Option<CalibrationConfig>,
    #[serde(default)]
    pub binning: BinningConfig,
    #[serde(default)]
    pub power_sweep: Option<PowerSweepConfig>,
    #[serde(default)]
    pub temperature: Option<TemperatureConfig>,
    /// Directory relative paths are resolved against; set by the loader.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// SHA-256 of the configuration file bytes; set by the loader.
    #[serde(skip)]
    pub config_sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(default)]
    pub format: FileFormat,
}

/// How drive power at the instrument maps to power at the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CalibrationConfig {
    Attenuation {
        input_attenuation_db: f64,
    },
    /// Referenced to the output-chain gain, given directly or from a
    /// Y-factor measurement.
    OutputGain {
        #[serde(default)]
        gain_db: Option<f64>,
        #[serde(default)]
        y_factor: Option<YFactorConfig>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YFactorConfig {
    pub p_hot: f64,
    pub p_cold: f64,
    #[serde(default = "default_t_hot")]
    pub t_hot: f64,
    #[serde(default = "default_t_cold")]
    pub t_cold: f64,
    pub bandwidth: f64,
    /// Use Planck occupation at this frequency instead of `k_B T`.
    #[serde(default)]
    pub planck_frequency: Option<f64>,
}

fn default_t_hot() -> f64 {
    4.0
}

fn default_t_cold() -> f64 {
    0.02
}

impl YFactorConfig {
    pub fn data(&self) -> YFactorData {
        YFactorData {
            p_hot: self.p_hot,
            p_cold: self.p_cold,
            t_hot: self.t_hot,
            t_cold: self.t_cold,
            bandwidth: self.bandwidth,
        }
    }

    pub fn noise_model(&self) -> NoiseModel {
        match self.planck_frequency {
            Some(frequency) => NoiseModel::Planck { frequency },
            None => NoiseModel::Classical,
        }
    }
}

/// Resolved calibration used during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PowerReference {
    Attenuation { input_attenuation_db: f64 },
    OutputGain { gain_db: f64 },
}

impl CalibrationConfig {
    pub fn resolve(&self) -> Result<PowerReference> {
        match self {
            CalibrationConfig::Attenuation { input_attenuation_db } => {
                if !input_attenuation_db.is_finite() {
                    return Err(Error::Config("input attenuation must be finite".into()));
                }
                Ok(PowerReference::Attenuation {
                    input_attenuation_db: *input_attenuation_db,
                })
            }
            CalibrationConfig::OutputGain { gain_db, y_factor } => match (gain_db, y_factor) {
                (Some(g), None) if g.is_finite() => Ok(PowerReference::OutputGain { gain_db: *g }),
                (None, Some(y)) => {
                    let r = y_factor_with(&y.data(), y.noise_model())
                        .map_err(|e| Error::Config(format!("Y-factor calibration: {e}")))?;
                    if !(r.gain_db.is_finite()) {
                        return Err(Error::Config("Y-factor calibration gives no finite gain".into()));
                    }
                    Ok(PowerReference::OutputGain { gain_db: r.gain_db })
                }
                _ => Err(Error::Config(
                    "output_gain calibration needs exactly one of gain_db or y_factor".into(),
                )),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinningConfig {
    pub bins: usize,
    #[serde(default)]
    pub axis: BinAxis,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            bins: 21,
            axis: BinAxis::Log10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSweepConfig {
    #[serde(default)]
    pub groups: Vec<PowerGroupConfig>,
    pub sweeps: Vec<SweepEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerGroupConfig {
    pub name: String,
    #[serde(default)]
    pub binning: Option<BinningConfig>,
}

pub const DEFAULT_GROUP: &str = "default";

fn default_group() -> String {
    DEFAULT_GROUP.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub resonator: String,
    #[serde(default = "default_group")]
    pub group: String,
    pub path: PathBuf,
    /// Overrides any power column in the file.
    #[serde(default)]
    pub drive_dbm: Option<f64>,
    #[serde(default)]
    pub format: Option<FileFormat>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureConfig {
    pub groups: Vec<TemperatureGroupConfig>,
    pub resonators: Vec<TemperatureResonatorConfig>,
}

/// Strategy with the gap given in micro-electronvolts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    FixAlpha { alpha: f64 },
    FixDelta { delta_0_uev: f64 },
    FixDeltaSweep { delta_0_uev: Vec<f64> },
}

impl StrategyConfig {
    pub fn to_strategy(&self) -> Result<FitStrategy> {
        let j = |v: f64| microev_to_joules(v).map_err(|e| Error::Config(e.to_string()));
        let s = match self {
            StrategyConfig::FixAlpha { alpha } => FitStrategy::FixAlpha { alpha: *alpha },
            StrategyConfig::FixDelta { delta_0_uev } => FitStrategy::FixDelta {
                delta_0: j(*delta_0_uev)?,
            },
            StrategyConfig::FixDeltaSweep { delta_0_uev } => FitStrategy::FixDeltaSweep {
                delta_0: delta_0_uev.iter().map(|&v| j(v)).collect::<Result<_>>()?,
            },
        };
        s.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialGuess {
    pub f_tan_delta: f64,
    pub delta_0_uev: f64,
    pub alpha: f64,
}

impl Default for InitialGuess {
    fn default() -> Self {
        Self {
            f_tan_delta: 1e-4,
            delta_0_uev: 300.0,
            alpha: 0.5,
        }
    }
}

impl InitialGuess {
    pub fn params(&self, f0: f64) -> Result<TempModelParams> {
        TempModelParams::new(self.f_tan_delta, microev_to_joules(self.delta_0_uev)?, self.alpha, f0)
            .map_err(|e| Error::Config(format!("initial guess: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureGroupConfig {
    pub name: String,
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub initial: InitialGuess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureResonatorConfig {
    pub name: String,
    pub group: String,
    /// Precomputed `temperature_k,freq_hz` file.
    #[serde(default)]
    pub series: Option<PathBuf>,
    /// One transmission sweep per temperature; each is notch-fitted.
    #[serde(default)]
    pub sweeps: Vec<TemperatureSweepEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureSweepEntry {
    pub temperature_k: f64,
    pub path: PathBuf,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.config_sha256 = super::report::sha256_hex(text.as_bytes());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// `--out` beats the environment variable, which beats the file.
    pub fn output_dir(&self, cli: Option<&Path>) -> Option<PathBuf> {
        if let Some(p) = cli {
            return Some(p.to_path_buf());
        }
        if let Some(p) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return Some(PathBuf::from(p));
        }
        self.output_dir.as_ref().map(|p| self.resolve(p))
    }

    pub fn binning_for(&self, group: &str) -> BinningConfig {
        self.power_sweep
            .as_ref()
            .and_then(|ps| ps.groups.iter().find(|g| g.name == group))
            .and_then(|g| g.binning)
            .unwrap_or(self.binning)
    }

    pub fn validate(&self) -> Result<()> {
        let check_bins = |b: &BinningConfig| {
            if b.bins < 2 {
                Err(Error::Config(format!("bin count must be at least 2, got {}", b.bins)))
            } else {
                Ok(())
            }
        };
        check_bins(&self.binning)?;
        let exists = |p: &Path| {
            let full = self.resolve(p);
            if full.is_file() {
                Ok(())
            } else {
                Err(Error::Config(format!("input file {} does not exist", full.display())))
            }
        };
        if let Some(cal) = &self.calibration {
            cal.resolve()?;
        }
        if let Some(ps) = &self.power_sweep {
            for g in &ps.groups {
                if let Some(b) = &g.binning {
                    check_bins(b)?;
                }
            }
            for s in &ps.sweeps {
                exists(&s.path)?;
            }
            if !ps.sweeps.is_empty() && self.calibration.is_none() {
                return Err(Error::Config("power sweep needs a [calibration] section".into()));
            }
        }
        if let Some(t) = &self.temperature {
            for g in &t.groups {
                g.strategy.to_strategy()?;
                g.initial.params(1.0)?;
            }
            for r in &t.resonators {
                if !t.groups.iter().any(|g| g.name == r.group) {
                    return Err(Error::Config(format!(
                        "resonator {} names unknown group {}",
                        r.name, r.group
                    )));
                }
                match (&r.series, r.sweeps.is_empty()) {
                    (Some(p), true) => exists(p)?,
                    (None, false) => {
                        for s in &r.sweeps {
                            exists(&s.path)?;
                        }
                    }
                    _ => {
                        return Err(Error::Config(format!(
                            "resonator {} needs exactly one of `series` or `sweeps`",
                            r.name
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "x").unwrap();
        fs::write(dir.path().join("t.csv"), "x").unwrap();
        let text = r#"
output_dir = "out"

[calibration]
mode = "output_gain"
y_factor = { p_hot = 2.0e-12, p_cold = 1.0e-13, bandwidth = 1.0e6 }

[binning]
bins = 20
axis = "linear"

[power_sweep]
groups = [{ name = "grAl", binning = { bins = 21 } }]
sweeps = [{ resonator = "G01", group = "grAl", path = "a.csv", drive_dbm = -60.0 }]

[temperature]
groups = [{ name = "Al", strategy = { kind = "fix_delta_sweep", delta_0_uev = [190.0, 210.0, 230.0] } }]
resonators = [{ name = "A01", group = "Al", series = "t.csv" }]
"#;
        let cfg = RunConfig::from_toml_str(text, dir.path()).unwrap();
        assert_eq!(cfg.binning_for("grAl").bins, 21);
        assert_eq!(cfg.binning_for("grAl").axis, BinAxis::Log10);
        assert_eq!(cfg.binning_for("other").bins, 20);
        assert!(matches!(
            cfg.calibration.as_ref().unwrap().resolve().unwrap(),
            PowerReference::OutputGain { .. }
        ));
        assert_eq!(cfg.config_sha256.len(), 64);
        assert_eq!(cfg.output_dir(Some(Path::new("cli"))), Some(PathBuf::from("cli")));
    }

    #[test]
    fn rejects_bad_configs() {
        let dir = tempfile::tempdir().unwrap();
        let bad = [
            "[binning]\nbins = 1\n",
            "[calibration]\nmode = \"attenuation\"\ninput_attenuation_db = 60.0\n[power_sweep]\nsweeps = [{ resonator = \"R\", path = \"missing.csv\" }]\n",
            "unknown_key = 3\n",
            "[calibration]\nmode = \"output_gain\"\n",
        ];
        for text in bad {
            assert!(
                matches!(RunConfig::from_toml_str(text, dir.path()), Err(Error::Config(_))),
                "{text}"
            );
        }
    }
}
