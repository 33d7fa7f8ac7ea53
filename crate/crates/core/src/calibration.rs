//! Drive-power calibration: Y-factor characterization of the output chain,
//! incident power at the sample and intracavity photon number.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, HBAR, PLANCK};
use crate::error::{ensure_finite, Error, Result};
use crate::types::Warning;
use crate::units::{db_to_linear, dbm_to_watts, linear_to_db};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementChain {
    pub gain_db: f64,
    pub noise_temperature: f64,
    pub input_attenuation_db: f64,
}

impl MeasurementChain {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.gain_db, "chain gain")?;
        ensure_finite(self.input_attenuation_db, "input attenuation")?;
        if !(self.noise_temperature.is_finite() && self.noise_temperature >= 0.0) {
            return Err(Error::invalid("noise temperature must be non-negative"));
        }
        Ok(())
    }
}

/// Noise powers measured with hot and cold matched loads, integrated over
/// `bandwidth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YFactorData {
    pub p_hot: f64,
    pub p_cold: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    pub bandwidth: f64,
}

impl YFactorData {
    pub fn validate(&self) -> Result<()> {
        let all = [self.p_hot, self.p_cold, self.t_hot, self.t_cold, self.bandwidth];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "Y-factor data" });
        }
        if self.p_cold <= 0.0 || self.p_hot <= 0.0 {
            return Err(Error::invalid("noise powers must be positive"));
        }
        if !(self.t_hot > self.t_cold && self.t_cold > 0.0) {
            return Err(Error::invalid("load temperatures must satisfy t_hot > t_cold > 0"));
        }
        if self.bandwidth <= 0.0 {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        Ok(())
    }
}

/// How a load temperature turns into available noise power per unit
/// bandwidth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// Rayleigh-Jeans, `k_B T`.
    #[default]
    Classical,
    /// Replace `T` with `(h f / k_B) (1 / (exp(h f / k_B T) - 1) + 1/2)`.
    Planck { frequency: f64 },
}

impl NoiseModel {
    pub fn effective_temperature(&self, t: f64) -> f64 {
        match *self {
            NoiseModel::Classical => t,
            NoiseModel::Planck { frequency } => {
                let t_q = PLANCK * frequency / BOLTZMANN;
                t_q * (1.0 / (t_q / t).exp_m1() + 0.5)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YFactorResult {
    pub y: f64,
    /// Linear power gain of the output chain.
    pub gain: f64,
    pub gain_db: f64,
    pub noise_temperature: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

pub fn y_factor(data: &YFactorData) -> Result<YFactorResult> {
    y_factor_with(data, NoiseModel::Classical)
}

/// `Y = p_hot / p_cold`, `T_e = (T_hot - Y T_cold) / (Y - 1)`,
/// `G = p_cold / (k_B (T_cold + T_e) b)`.
pub fn y_factor_with(data: &YFactorData, noise: NoiseModel) -> Result<YFactorResult> {
    data.validate()?;
    if let NoiseModel::Planck { frequency } = noise {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::invalid("Planck noise model needs a positive frequency"));
        }
    }
    let y = data.p_hot / data.p_cold;
    if y <= 1.0 {
        return Err(Error::UnphysicalMeasurement { y });
    }
    let t_hot = noise.effective_temperature(data.t_hot);
    let t_cold = noise.effective_temperature(data.t_cold);
    let t_e = (t_hot - y * t_cold) / (y - 1.0);
    let mut warnings = Vec::new();
    if t_e < 0.0 {
        log::warn!("Y-factor noise temperature is negative ({t_e} K)");
        warnings.push(Warning::NegativeNoiseTemperature { value: t_e });
    }
    let gain = data.p_cold / (BOLTZMANN * (t_cold + t_e) * data.bandwidth);
    let gain_db = if gain > 0.0 { linear_to_db(gain)? } else { f64::NAN };
    Ok(YFactorResult {
        y,
        gain,
        gain_db,
        noise_temperature: t_e,
        warnings,
    })
}

/// Power at the sample for a known input-line attenuation.
pub fn incident_power(drive_dbm: f64, input_attenuation_db: f64) -> Result<f64> {
    ensure_finite(input_attenuation_db, "input attenuation")?;
    dbm_to_watts(drive_dbm - input_attenuation_db)
}

/// Power at the sample referenced to the output chain: the off-resonant
/// transmission amplitude `a` is the input loss times the output gain, so
/// `P_inc = P_drive a^2 / G`.
pub fn incident_power_from_output_gain(drive_dbm: f64, background_amp: f64, gain_db: f64) -> Result<f64> {
    ensure_finite(background_amp, "background amplitude")?;
    if background_amp <= 0.0 {
        return Err(Error::invalid("background amplitude must be positive"));
    }
    Ok(dbm_to_watts(drive_dbm)? * background_amp * background_amp / db_to_linear(gain_db)?)
}

/// Average intracavity photon number, `n = 2 Q_l^2 P / (|Q_c| hbar w^2)`.
pub fn photon_number(q_l: f64, q_c_mag: f64, f_r: f64, p_inc: f64) -> Result<f64> {
    let all = [q_l, q_c_mag, f_r, p_inc];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "photon-number inputs",
        });
    }
    if q_l <= 0.0 || q_c_mag <= 0.0 || f_r <= 0.0 || p_inc < 0.0 {
        return Err(Error::invalid(
            "photon number needs positive Q_l, |Q_c|, f_r and P >= 0",
        ));
    }
    let omega = 2.0 * PI * f_r;
    Ok(2.0 * q_l * q_l * p_inc / (q_c_mag * HBAR * omega * omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn forward(gain: f64, t_e: f64, b: f64, t_hot: f64, t_cold: f64) -> YFactorData {
        YFactorData {
            p_hot: BOLTZMANN * gain * b * (t_hot + t_e),
            p_cold: BOLTZMANN * gain * b * (t_cold + t_e),
            t_hot,
            t_cold,
            bandwidth: b,
        }
    }

    #[test]
    fn recovers_forward_chain() {
        let data = forward(1e6, 5.0, 1e6, 4.0, 0.02);
        let r = y_factor(&data).unwrap();
        assert!((r.gain / 1e6 - 1.0).abs() < 1e-10);
        assert!((r.noise_temperature / 5.0 - 1.0).abs() < 1e-10);
        assert!((r.gain_db - 60.0).abs() < 1e-8);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn noiseless_amplifier() {
        let b = 1e6;
        let p_cold = 1e-15;
        let data = YFactorData {
            p_hot: p_cold * 4.0 / 0.02,
            p_cold,
            t_hot: 4.0,
            t_cold: 0.02,
            bandwidth: b,
        };
        let r = y_factor(&data).unwrap();
        assert!(r.noise_temperature.abs() < 1e-12);
        assert!((r.gain / (p_cold / (BOLTZMANN * 0.02 * b)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unphysical_and_negative_cases() {
        let mut data = forward(1e6, 5.0, 1e6, 4.0, 0.02);
        data.p_hot = data.p_cold;
        assert!(matches!(y_factor(&data), Err(Error::UnphysicalMeasurement { .. })));
        // Y above T_hot / T_cold means negative noise temperature
        let data = YFactorData {
            p_hot: 300.0,
            p_cold: 1.0,
            t_hot: 4.0,
            t_cold: 0.02,
            bandwidth: 1.0,
        };
        let r = y_factor(&data).unwrap();
        assert!(r.noise_temperature < 0.0);
        assert!(matches!(r.warnings[0], Warning::NegativeNoiseTemperature { .. }));
    }

    #[test]
    fn planck_mode() {
        let f = 5e9;
        let m = NoiseModel::Planck { frequency: f };
        // high-temperature limit approaches T
        assert!((m.effective_temperature(100.0) / 100.0 - 1.0).abs() < 1e-4);
        // zero-point floor h f / 2 k_B
        let floor = PLANCK * f / (2.0 * BOLTZMANN);
        assert!((m.effective_temperature(0.005) / floor - 1.0).abs() < 1e-10);
        let data = forward(1e6, 5.0, 1e6, 4.0, 0.02);
        let classical = y_factor(&data).unwrap();
        let planck = y_factor_with(&data, m).unwrap();
        assert!(planck.noise_temperature < classical.noise_temperature);
    }

    #[test]
    fn incident_power_examples() {
        // -120 dBm and -130 dBm at the sample
        assert!((incident_power(-60.0, 60.0).unwrap() / 1e-15 - 1.0).abs() < 1e-12);
        assert!((incident_power(0.0, 0.0).unwrap() - 1e-3).abs() < 1e-18);
        assert!((incident_power(-77.0, 53.0).unwrap() / 1e-16 - 1.0).abs() < 1e-12);
        // a^2 / G = 1e-2 / 1e4 is 60 dB of input loss
        let p = incident_power_from_output_gain(-60.0, 0.1, 40.0).unwrap();
        assert!((p / 1e-15 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn photon_number_examples() {
        assert_eq!(photon_number(2000.0, 4000.0, 5e9, 0.0).unwrap(), 0.0);
        let n = photon_number(2000.0, 4000.0, 5e9, 1e-15).unwrap();
        assert!((n - 19.2).abs() < 0.05, "{n}");
        assert!(photon_number(-1.0, 4000.0, 5e9, 1e-15).is_err());
        assert!(photon_number(2000.0, 4000.0, 5e9, -1e-15).is_err());
    }

    proptest! {
        #[test]
        fn photon_number_scaling(q_l in 10.0..1e5f64, q_c in 10.0..1e6f64, f in 1e9..2e10f64, p in 1e-20..1e-9f64) {
            let n = photon_number(q_l, q_c, f, p).unwrap();
            prop_assert_eq!(photon_number(q_l, q_c, f, 2.0 * p).unwrap(), 2.0 * n);
            let r = photon_number(2.0 * q_l, q_c, f, p).unwrap() / n;
            prop_assert!((r - 4.0).abs() <= 4.0 * 4.0 * f64::EPSILON);
            let r = photon_number(q_l, q_c, 2.0 * f, p).unwrap() / n;
            prop_assert!((r - 0.25).abs() <= 0.25 * 4.0 * f64::EPSILON);
        }

        #[test]
        fn y_factor_scale_invariance(g in 1e2..1e8f64, t_e in 0.1..50.0f64, c in 1e-3..1e3f64) {
            let data = forward(g, t_e, 1e6, 4.0, 0.02);
            let scaled = YFactorData { p_hot: data.p_hot * c, p_cold: data.p_cold * c, ..data };
            let a = y_factor(&data).unwrap();
            let b = y_factor(&scaled).unwrap();
            prop_assert!((b.gain / (c * a.gain) - 1.0).abs() < 1e-12);
            prop_assert!((b.noise_temperature / a.noise_temperature - 1.0).abs() < 1e-10);
        }
    }
}
