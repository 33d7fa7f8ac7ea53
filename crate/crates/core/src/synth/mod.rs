//! Forward-model generators used as oracles for the fitting code.

mod fixtures;
pub mod rng;

pub use fixtures::{
    power_sweep_fixture, resonator_family, temperature_fixture, FixtureResonator, FixtureSweep, PowerSweepFixture,
    QintLaw, SweepShape, TemperatureFixture, TemperatureMember,
};
pub use rng::{GaussianSource, Xoshiro256};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::notch::NotchModel;
use crate::temperature::model_shift;
use crate::types::{ComplexSweep, TempModelParams, TemperatureSeries};

/// Additive complex Gaussian noise: real and imaginary parts each get an
/// independent N(0, sigma^2) sample, real part drawn first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub complex_sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            complex_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn new(complex_sigma: f64, seed: u64) -> Result<Self> {
        if !(complex_sigma.is_finite() && complex_sigma >= 0.0) {
            return Err(Error::invalid("noise sigma must be finite and non-negative"));
        }
        Ok(Self { complex_sigma, seed })
    }
}

/// Evaluate the notch model on `grid` and add seeded noise.
pub fn synth_notch(model: &NotchModel, grid: &[f64], noise: NoiseSpec) -> Result<ComplexSweep> {
    if model.q_l <= 0.0 || !model.q_l.is_finite() {
        return Err(Error::invalid("Q_l must be positive"));
    }
    let ratio = model.coupling_ratio();
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::invalid(format!("Q_l/|Q_c| = {ratio} outside [0, 1]")));
    }
    let (Some(&lo), Some(&hi)) = (grid.first(), grid.last()) else {
        return Err(Error::EmptyInput("frequency grid".into()));
    };
    if model.f_r < lo || model.f_r > hi {
        return Err(Error::invalid(format!(
            "resonance {} Hz outside the grid [{lo}, {hi}]",
            model.f_r
        )));
    }
    let mut gauss = GaussianSource::new(noise.seed);
    let s21 = grid
        .iter()
        .map(|&f| {
            let clean = model.s21(f);
            if noise.complex_sigma > 0.0 {
                let re = gauss.next_normal(noise.complex_sigma);
                let im = gauss.next_normal(noise.complex_sigma);
                clean + Complex64::new(re, im)
            } else {
                clean
            }
        })
        .collect();
    ComplexSweep::new(grid.to_vec(), s21)
}

/// `n` equally spaced points covering `f_r * (1 +- half_span_linewidths / Q_l)`.
pub fn linewidth_grid(f_r: f64, q_l: f64, half_span_linewidths: f64, n: usize) -> Vec<f64> {
    let half = half_span_linewidths * f_r / q_l;
    (0..n)
        .map(|i| f_r - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

/// `f(T) = f0 (1 + shift(T)) (1 + jitter * N(0, 1))`.
pub fn synth_temperature_series(
    params: &TempModelParams,
    temperatures: &[f64],
    relative_jitter: f64,
    seed: u64,
) -> Result<TemperatureSeries> {
    params.validate()?;
    if !(relative_jitter.is_finite() && relative_jitter >= 0.0) {
        return Err(Error::invalid("jitter must be finite and non-negative"));
    }
    let mut gauss = GaussianSource::new(seed);
    let mut points = Vec::with_capacity(temperatures.len());
    for &t in temperatures {
        let clean = params.f0 * (1.0 + model_shift(t, params)?);
        let f = if relative_jitter > 0.0 {
            clean * (1.0 + gauss.next_normal(relative_jitter))
        } else {
            clean
        };
        points.push((t, f));
    }
    TemperatureSeries::new(points)
}
