//! Domain value types shared across the crate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-fatal conditions raised while fitting or validating inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The sweep has too little off-resonant margin on one side; cable delay
    /// came from a global phase-slope regression.
    NoOffResonantMargin,
    /// More than one dip was found in span; the deepest was fitted.
    MultipleResonances { count: usize },
    /// Fitted kinetic fraction left [0, 1] and was clamped.
    AlphaClamped { raw: f64 },
    /// Points below the temperature floor were dropped before fitting.
    PointsBelowTemperatureFloor { dropped: usize },
    /// Y-factor noise temperature came out negative.
    NegativeNoiseTemperature { value: f64 },
    /// Microstrip gap is not small compared to the strip width.
    WideGap { h_over_w: f64 },
}

/// A frequency sweep of complex transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSweep {
    frequencies: Vec<f64>,
    s21: Vec<Complex64>,
    drive_power_dbm: Option<f64>,
    point_variance: Option<Vec<f64>>,
}

pub const MIN_SWEEP_POINTS: usize = 8;

impl ComplexSweep {
    pub fn new(frequencies: Vec<f64>, s21: Vec<Complex64>) -> Result<Self> {
        if frequencies.len() != s21.len() {
            return Err(Error::invalid(format!(
                "sweep has {} frequencies but {} transmission values",
                frequencies.len(),
                s21.len()
            )));
        }
        if frequencies.len() < MIN_SWEEP_POINTS {
            return Err(Error::invalid(format!(
                "sweep needs at least {MIN_SWEEP_POINTS} points, got {}",
                frequencies.len()
            )));
        }
        if frequencies.iter().any(|f| !f.is_finite()) || s21.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { what: "sweep data" });
        }
        if frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("sweep frequencies must be strictly increasing"));
        }
        Ok(Self {
            frequencies,
            s21,
            drive_power_dbm: None,
            point_variance: None,
        })
    }

    pub fn with_drive_power(mut self, dbm: f64) -> Result<Self> {
        if !dbm.is_finite() {
            return Err(Error::NonFinite { what: "drive power" });
        }
        self.drive_power_dbm = Some(dbm);
        Ok(self)
    }

    /// Attach per-point variance of the averaged transmission; the final
    /// refinement then weights points by inverse variance.
    pub fn with_point_variance(mut self, variance: Vec<f64>) -> Result<Self> {
        if variance.len() != self.len() {
            return Err(Error::invalid("variance length does not match sweep length"));
        }
        if variance.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::invalid("point variances must be positive and finite"));
        }
        self.point_variance = Some(variance);
        Ok(self)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn s21(&self) -> &[Complex64] {
        &self.s21
    }

    pub fn drive_power_dbm(&self) -> Option<f64> {
        self.drive_power_dbm
    }

    pub fn point_variance(&self) -> Option<&[f64]> {
        self.point_variance.as_deref()
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.frequencies[0], self.frequencies[self.len() - 1])
    }

    /// Copy of the sweep restricted to `range` (index range).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let mut out = Self::new(
            self.frequencies[range.clone()].to_vec(),
            self.s21[range.clone()].to_vec(),
        )?;
        out.drive_power_dbm = self.drive_power_dbm;
        out.point_variance = self.point_variance.as_ref().map(|v| v[range].to_vec());
        Ok(out)
    }

    /// Copy of the sweep with every transmission value multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.s21.iter_mut().for_each(|z| *z *= c);
        out
    }
}

/// Parameters extracted from a notch-type resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotchFit {
    pub f_r: f64,
    pub q_l: f64,
    pub q_c_mag: f64,
    pub phi: f64,
    pub q_int: f64,
    pub background_amp: f64,
    pub background_phase: f64,
    pub cable_delay: f64,
    pub residual_rms: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl NotchFit {
    /// Loss tangent read-out, `1 / Q_int`.
    pub fn tan_delta(&self) -> f64 {
        1.0 / self.q_int
    }
}

/// Resonance frequency versus temperature for one resonator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSeries {
    points: Vec<(f64, f64)>,
    f0: f64,
    /// Temperature at which `f0` was measured; `None` when `f0` is an
    /// externally supplied zero-temperature reference.
    reference_temperature: Option<f64>,
}

impl TemperatureSeries {
    /// Build a series with the reference frequency taken from the
    /// lowest-temperature point.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let (t0, f0) = points
            .first()
            .copied()
            .ok_or_else(|| Error::EmptyInput("temperature series".into()))?;
        let mut s = Self::with_reference(points, f0)?;
        s.reference_temperature = Some(t0);
        Ok(s)
    }

    /// Build a series against an explicit zero-temperature reference `f0`.
    pub fn with_reference(points: Vec<(f64, f64)>, f0: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("temperature series".into()));
        }
        if points.iter().any(|&(t, f)| !t.is_finite() || !f.is_finite()) {
            return Err(Error::NonFinite {
                what: "temperature series",
            });
        }
        if points.iter().any(|&(t, f)| t <= 0.0 || f <= 0.0) {
            return Err(Error::invalid("temperatures and frequencies must be positive"));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("temperatures must be strictly increasing"));
        }
        if !(f0.is_finite() && f0 > 0.0) {
            return Err(Error::invalid("reference frequency must be positive"));
        }
        Ok(Self {
            points,
            f0,
            reference_temperature: None,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn reference_temperature(&self) -> Option<f64> {
        self.reference_temperature
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(T, (f(T) - f0) / f0)` pairs.
    pub fn relative_shifts(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().map(move |&(t, f)| (t, (f - self.f0) / self.f0))
    }
}

/// Which temperature-model parameters were held fixed during a fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedMask {
    pub f_tan_delta: bool,
    pub delta_0: bool,
    pub alpha: bool,
}

/// One-sigma uncertainties; `None` for fields that were not estimated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamUncertainty {
    pub f_tan_delta: Option<f64>,
    pub delta_0: Option<f64>,
    pub alpha: Option<f64>,
}

/// Parameters of the TLS + thermal-quasiparticle frequency-shift model.
///
/// `delta_0` is in joules; use [`crate::units::microev_to_joules`] at the
/// boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempModelParams {
    pub f_tan_delta: f64,
    pub delta_0: f64,
    pub alpha: f64,
    pub f0: f64,
    #[serde(default)]
    pub fixed: FixedMask,
    #[serde(default)]
    pub uncertainties: ParamUncertainty,
}

impl TempModelParams {
    pub fn new(f_tan_delta: f64, delta_0: f64, alpha: f64, f0: f64) -> Result<Self> {
        let p = Self {
            f_tan_delta,
            delta_0,
            alpha,
            f0,
            fixed: FixedMask::default(),
            uncertainties: ParamUncertainty::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.f_tan_delta, self.delta_0, self.alpha, self.f0];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "temperature-model parameters",
            });
        }
        if self.f_tan_delta < 0.0 {
            return Err(Error::invalid("F tan(delta) must be non-negative"));
        }
        if self.delta_0 <= 0.0 {
            return Err(Error::invalid("superconducting gap must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("kinetic inductance fraction must lie in [0, 1]"));
        }
        if self.f0 <= 0.0 {
            return Err(Error::invalid("reference frequency must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 1e9 + i as f64 * 1e3).collect()
    }

    #[test]
    fn sweep_invariants() {
        let ok = ComplexSweep::new(grid(8), vec![Complex64::new(1.0, 0.0); 8]);
        assert!(ok.is_ok());
        assert!(ComplexSweep::new(grid(7), vec![Complex64::new(1.0, 0.0); 7]).is_err());
        assert!(ComplexSweep::new(grid(8), vec![Complex64::new(1.0, 0.0); 9]).is_err());

        let mut f = grid(8);
        f.swap(2, 3);
        assert!(ComplexSweep::new(f, vec![Complex64::new(1.0, 0.0); 8]).is_err());

        let mut s = vec![Complex64::new(1.0, 0.0); 8];
        s[4] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(ComplexSweep::new(grid(8), s), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn series_reference_is_lowest_temperature() {
        let s = TemperatureSeries::new(vec![(0.05, 5e9), (0.1, 5.001e9)]).unwrap();
        assert_eq!(s.f0(), 5e9);
        let shifts: Vec<_> = s.relative_shifts().collect();
        assert_eq!(shifts[0].1, 0.0);
        assert!((shifts[1].1 - 2e-4).abs() < 1e-15);
        assert!(TemperatureSeries::new(vec![(0.1, 5e9), (0.05, 5e9)]).is_err());
        assert!(TemperatureSeries::new(vec![(0.0, 5e9)]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(TempModelParams::new(1e-4, 1e-23, 0.5, 5e9).is_ok());
        assert!(TempModelParams::new(-1e-4, 1e-23, 0.5, 5e9).is_err());
        assert!(TempModelParams::new(1e-4, 0.0, 0.5, 5e9).is_err());
        assert!(TempModelParams::new(1e-4, 1e-23, 1.5, 5e9).is_err());
    }
}
