//! Multi-resonator datasets for exercising the batch pipeline.

use serde::{Deserialize, Serialize};

use super::{linewidth_grid, synth_notch, synth_temperature_series, GaussianSource, NoiseSpec};
use crate::calibration::photon_number;
use crate::error::{Error, Result};
use crate::notch::NotchModel;
use crate::types::{ComplexSweep, TempModelParams, TemperatureSeries};
use crate::units::dbm_to_watts;

/// Internal Q versus photon number: flat at `q_low` up to one photon,
/// then `q_low * n^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QintLaw {
    pub q_low: f64,
    pub exponent: f64,
}

impl QintLaw {
    pub fn at(&self, n_bar: f64) -> f64 {
        self.q_low * n_bar.max(1.0).powf(self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureResonator {
    pub name: String,
    pub f_r: f64,
    pub q_c_mag: f64,
    pub phi: f64,
    pub law: QintLaw,
}

/// One generated sweep with the truth it was generated from.
#[derive(Debug, Clone)]
pub struct FixtureSweep {
    pub resonator: String,
    pub drive_dbm: f64,
    pub n_bar: f64,
    pub q_int: f64,
    pub q_l: f64,
    pub sweep: ComplexSweep,
}

#[derive(Debug, Clone)]
pub struct PowerSweepFixture {
    pub input_attenuation_db: f64,
    pub sweeps: Vec<FixtureSweep>,
}

/// Shared sweep settings for fixture generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepShape {
    pub points: usize,
    pub half_span_linewidths: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub cable_delay: f64,
    pub noise_sigma: f64,
}

impl Default for SweepShape {
    fn default() -> Self {
        Self {
            points: 401,
            half_span_linewidths: 8.0,
            amplitude: 0.9,
            phase: 0.4,
            cable_delay: 25e-9,
            noise_sigma: 0.0,
        }
    }
}

/// Solve `Q_int = law(n)`, `n = n(Q_l(Q_int))` by fixed-point iteration.
fn self_consistent(res: &FixtureResonator, p_inc: f64) -> Result<(f64, f64, f64)> {
    let cos_term = res.phi.cos() / res.q_c_mag;
    let mut q_int = res.law.q_low;
    let mut n = 0.0;
    for _ in 0..200 {
        let q_l = 1.0 / (1.0 / q_int + cos_term);
        n = photon_number(q_l, res.q_c_mag, res.f_r, p_inc)?;
        let next = res.law.at(n);
        let done = (next - q_int).abs() <= 1e-14 * q_int;
        q_int = next;
        if done {
            break;
        }
    }
    Ok((n, q_int, 1.0 / (1.0 / q_int + cos_term)))
}

fn stream_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Every resonator swept at every drive power, in resonator-major order.
pub fn power_sweep_fixture(
    resonators: &[FixtureResonator],
    drive_dbm: &[f64],
    input_attenuation_db: f64,
    shape: SweepShape,
    seed: u64,
) -> Result<PowerSweepFixture> {
    if resonators.is_empty() || drive_dbm.is_empty() {
        return Err(Error::EmptyInput("power-sweep fixture".into()));
    }
    let mut sweeps = Vec::with_capacity(resonators.len() * drive_dbm.len());
    for res in resonators {
        for &p in drive_dbm {
            let p_inc = dbm_to_watts(p - input_attenuation_db)?;
            let (n_bar, q_int, q_l) = self_consistent(res, p_inc)?;
            let model = NotchModel {
                amplitude: shape.amplitude,
                phase: shape.phase,
                cable_delay: shape.cable_delay,
                q_l,
                q_c_mag: res.q_c_mag,
                phi: res.phi,
                f_r: res.f_r,
            };
            let grid = linewidth_grid(res.f_r, q_l, shape.half_span_linewidths, shape.points);
            let noise = NoiseSpec::new(shape.noise_sigma, stream_seed(seed, sweeps.len()))?;
            let sweep = synth_notch(&model, &grid, noise)?.with_drive_power(p)?;
            sweeps.push(FixtureSweep {
                resonator: res.name.clone(),
                drive_dbm: p,
                n_bar,
                q_int,
                q_l,
                sweep,
            });
        }
    }
    Ok(PowerSweepFixture {
        input_attenuation_db,
        sweeps,
    })
}

/// `count` resonators spaced 150 MHz apart from `f_start`, with coupling
/// quality factors and low-power internal Q spread around `q_low`.
pub fn resonator_family(prefix: &str, count: usize, f_start: f64, q_low: f64, seed: u64) -> Vec<FixtureResonator> {
    let mut gauss = GaussianSource::new(seed);
    (0..count)
        .map(|k| FixtureResonator {
            name: format!("{prefix}{:02}", k + 1),
            f_r: f_start + 150e6 * k as f64,
            q_c_mag: 2.0 * q_low * (1.0 + 0.1 * gauss.next_standard()).max(0.5),
            phi: 0.1 * gauss.next_standard(),
            law: QintLaw {
                q_low: q_low * (1.0 + 0.1 * gauss.next_standard()).max(0.5),
                exponent: 0.12,
            },
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TemperatureMember {
    pub name: String,
    pub truth: TempModelParams,
    pub series: TemperatureSeries,
}

#[derive(Debug, Clone)]
pub struct TemperatureFixture {
    pub members: Vec<TemperatureMember>,
}

/// Group of resonators sharing `truth` up to a relative scatter on
/// `F tan(delta)` and the gap, each with its own `f0` and frequency jitter.
pub fn temperature_fixture(
    prefix: &str,
    truth: &TempModelParams,
    count: usize,
    relative_scatter: f64,
    temperatures: &[f64],
    jitter: f64,
    seed: u64,
) -> Result<TemperatureFixture> {
    truth.validate()?;
    let mut gauss = GaussianSource::new(seed);
    let mut members = Vec::with_capacity(count);
    for k in 0..count {
        let mut p = *truth;
        p.f_tan_delta *= 1.0 + relative_scatter * gauss.next_standard();
        p.delta_0 *= 1.0 + relative_scatter * gauss.next_standard();
        p.f0 += 120e6 * k as f64;
        p.validate()?;
        let series = synth_temperature_series(&p, temperatures, jitter, stream_seed(seed, k))?;
        members.push(TemperatureMember {
            name: format!("{prefix}{:02}", k + 1),
            truth: p,
            series,
        });
    }
    Ok(TemperatureFixture { members })
}
