//! Vacuum-gap microstrip: per-length inductance and capacitance,
//! kinetic fraction and quarter-wave resonance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{EPS_0, MU_0};
use crate::error::{Error, Result};
use crate::types::Warning;

/// Gap-to-width ratio above which the parallel-plate picture is flagged.
pub const WIDE_GAP_RATIO: f64 = 0.25;
pub const MIN_ORACLE_STRIPS: usize = 100;

fn positive(v: f64, what: &str) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::invalid(format!("{what} must be finite")));
    }
    if v <= 0.0 {
        return Err(Error::invalid(format!("{what} must be positive, got {v}")));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrostripGeometry {
    /// Vacuum gap height, m.
    pub h: f64,
    /// Center-conductor width, m.
    pub w: f64,
    /// Resonator length, m.
    pub length: f64,
    /// H per square.
    pub sheet_kinetic_inductance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSummary {
    pub geometric_inductance: f64,
    pub kinetic_inductance: f64,
    pub kinetic_fraction: f64,
    pub capacitance: f64,
    pub resonance: QuarterWave,
}

impl MicrostripGeometry {
    pub fn new(h: f64, w: f64, length: f64, sheet_kinetic_inductance: f64) -> Result<Self> {
        let g = Self {
            h: positive(h, "gap height")?,
            w: positive(w, "strip width")?,
            length: positive(length, "length")?,
            sheet_kinetic_inductance,
        };
        if !(sheet_kinetic_inductance.is_finite() && sheet_kinetic_inductance >= 0.0) {
            return Err(Error::invalid("sheet kinetic inductance must be non-negative"));
        }
        if let Some(w) = g.warning() {
            log::warn!("{w:?}: parallel-plate formulas lose accuracy");
        }
        Ok(g)
    }

    pub fn warning(&self) -> Option<Warning> {
        let ratio = self.h / self.w;
        (ratio >= WIDE_GAP_RATIO).then_some(Warning::WideGap { h_over_w: ratio })
    }

    pub fn summary(&self) -> Result<LineSummary> {
        let l_geom = geometric_inductance_per_length(self.h, self.w)?;
        let l_kin = kinetic_inductance_per_length(self.sheet_kinetic_inductance, self.w)?;
        let c = capacitance_per_length(self.w, self.h)?;
        Ok(LineSummary {
            geometric_inductance: l_geom,
            kinetic_inductance: l_kin,
            kinetic_fraction: kinetic_fraction(l_kin, l_geom)?,
            capacitance: c,
            resonance: quarter_wave_frequency(l_geom + l_kin, c, self.length)?,
        })
    }
}

/// `mu_0 h / w`.
pub fn geometric_inductance_per_length(h: f64, w: f64) -> Result<f64> {
    Ok(MU_0 * positive(h, "gap height")? / positive(w, "strip width")?)
}

/// Sheet inductance over strip width.
pub fn kinetic_inductance_per_length(sheet: f64, w: f64) -> Result<f64> {
    if !(sheet.is_finite() && sheet >= 0.0) {
        return Err(Error::invalid("sheet kinetic inductance must be non-negative"));
    }
    Ok(sheet / positive(w, "strip width")?)
}

/// `L_kin / (L_kin + L_geom)`.
pub fn kinetic_fraction(l_kin: f64, l_geom: f64) -> Result<f64> {
    if !(l_kin.is_finite() && l_geom.is_finite()) || l_kin < 0.0 || l_geom < 0.0 {
        return Err(Error::invalid("inductances must be finite and non-negative"));
    }
    if l_kin == 0.0 && l_geom == 0.0 {
        return Err(Error::UndefinedFraction);
    }
    Ok(l_kin / (l_kin + l_geom))
}

/// `eps_0 w / h`.
pub fn capacitance_per_length(w: f64, h: f64) -> Result<f64> {
    Ok(EPS_0 * positive(w, "strip width")? / positive(h, "gap height")?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarterWave {
    pub frequency: f64,
    pub phase_velocity: f64,
    pub impedance: f64,
}

pub fn quarter_wave_frequency(l_total: f64, c: f64, length: f64) -> Result<QuarterWave> {
    let l_total = positive(l_total, "inductance per length")?;
    let c = positive(c, "capacitance per length")?;
    let length = positive(length, "length")?;
    let v = 1.0 / (l_total * c).sqrt();
    Ok(QuarterWave {
        frequency: v / (4.0 * length),
        phase_velocity: v,
        impedance: (l_total / c).sqrt(),
    })
}

/// Length giving a quarter-wave resonance at `f`.
pub fn quarter_wave_length(l_total: f64, c: f64, f: f64) -> Result<f64> {
    let v = quarter_wave_frequency(l_total, c, 1.0)?.phase_velocity;
    Ok(v / (4.0 * positive(f, "frequency")?))
}

/// Inductance per unit length of two opposing uniform current sheets of
/// width `w` a distance `h` apart, from the magnetic energy of `n_strips`
/// filaments per sheet.
///
/// `L = -(mu_0 / 2 pi I^2) sum_ij I_i I_j ln d_ij`. A filament's own
/// distance is the geometric mean distance of a thin strip, `ln d = ln D - 3/2`.
/// Including the fringe field, the result sits below `mu_0 h / w` and
/// approaches it as `w / h` grows.
pub fn derivation_oracle(h: f64, w: f64, n_strips: usize) -> Result<f64> {
    let h = positive(h, "gap height")?;
    let w = positive(w, "strip width")?;
    if n_strips < MIN_ORACLE_STRIPS {
        return Err(Error::invalid(format!(
            "oracle needs at least {MIN_ORACLE_STRIPS} strips, got {n_strips}"
        )));
    }
    let n = n_strips;
    let dx = w / n as f64;
    // Pairs at index offset k occur (n - k) times each way; the sum is
    // Toeplitz, so O(n) terms suffice.
    let mut same = n as f64 * (dx.ln() - 1.5);
    let mut cross = n as f64 * h.ln();
    for k in 1..n {
        let mult = 2.0 * (n - k) as f64;
        let s = k as f64 * dx;
        same += mult * s.ln();
        cross += mult * 0.5 * (s * s + h * h).ln();
    }
    let n2 = (n * n) as f64;
    Ok(MU_0 / PI * (cross - same) / n2)
}

/// Flux per unit length linked by the oracle geometry at current `current`
/// in the lower sheet (and `-current` in the upper one).
pub fn oracle_flux(h: f64, w: f64, n_strips: usize, current: f64) -> Result<f64> {
    if !current.is_finite() {
        return Err(Error::NonFinite { what: "current" });
    }
    Ok(derivation_oracle(h, w, n_strips)? * current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn geometric_value() {
        let l = geometric_inductance_per_length(80e-9, 4e-6).unwrap();
        assert!((l / 25.13e-9 - 1.0).abs() < 5e-4, "{l}");
        assert_eq!(l, geometric_inductance_per_length(160e-9, 8e-6).unwrap());
        assert!(geometric_inductance_per_length(1e-15, 4e-6).unwrap() < 1e-15);
        assert!(geometric_inductance_per_length(0.0, 4e-6).is_err());
    }

    #[test]
    fn kinetic_values() {
        let l = kinetic_inductance_per_length(100e-12, 4e-6).unwrap();
        assert!((l / 25e-6 - 1.0).abs() < 1e-12);
        assert_eq!(kinetic_inductance_per_length(0.0, 4e-6).unwrap(), 0.0);
        assert_eq!(kinetic_inductance_per_length(100e-12, 8e-6).unwrap(), l / 2.0);
        assert!(kinetic_inductance_per_length(1e-12, 0.0).is_err());
    }

    #[test]
    fn fraction_limits() {
        assert_eq!(kinetic_fraction(1e-6, 0.0).unwrap(), 1.0);
        assert_eq!(kinetic_fraction(0.0, 1e-6).unwrap(), 0.0);
        assert!(matches!(kinetic_fraction(0.0, 0.0), Err(Error::UndefinedFraction)));
        let a = kinetic_fraction(25e-6, 25.13e-9).unwrap();
        assert!((a - 0.999).abs() < 5e-4);
    }

    #[test]
    fn capacitance_values() {
        let c = capacitance_per_length(4e-6, 80e-9).unwrap();
        assert!((c / 442.7e-12 - 1.0).abs() < 1e-4, "{c}");
        assert_eq!(capacitance_per_length(4e-6, 160e-9).unwrap(), c / 2.0);
        assert_eq!(capacitance_per_length(8e-6, 160e-9).unwrap(), c);
    }

    #[test]
    fn gral_line() {
        let g = MicrostripGeometry::new(80e-9, 4e-6, 1.0, 100e-12).unwrap();
        assert!(g.warning().is_none());
        let s = g.summary().unwrap();
        let v = s.resonance.phase_velocity;
        assert!((v / 9.5e6 - 1.0).abs() < 0.01, "{v}");
        let l_tot = s.geometric_inductance + s.kinetic_inductance;
        let len = quarter_wave_length(l_tot, s.capacitance, 5e9).unwrap();
        let f = quarter_wave_frequency(l_tot, s.capacitance, len).unwrap().frequency;
        assert!((f / 5e9 - 1.0).abs() < 1e-12);
        assert!((4e9..=6.5e9).contains(&f));
        let f2 = quarter_wave_frequency(l_tot, s.capacitance, 2.0 * len)
            .unwrap()
            .frequency;
        assert!((f2 / (f / 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wide_gap_warns() {
        let g = MicrostripGeometry::new(1e-6, 2e-6, 1e-3, 0.0).unwrap();
        assert!(matches!(g.warning(), Some(Warning::WideGap { .. })));
    }

    #[test]
    fn oracle_against_closed_form() {
        let closed = |h: f64, w: f64| MU_0 * h / w;
        let l50 = derivation_oracle(80e-9, 4e-6, 2000).unwrap();
        assert!((l50 / closed(80e-9, 4e-6) - 1.0).abs() < 0.07);
        let l1000 = derivation_oracle(1e-9, 1e-6, 400_000).unwrap();
        assert!((l1000 / closed(1e-9, 1e-6) - 1.0).abs() < 0.005);
        assert!(derivation_oracle(1e-9, 1e-6, 99).is_err());
    }

    #[test]
    fn oracle_converges_monotonically() {
        let vals: Vec<f64> = [125, 250, 500, 1000, 2000, 4000]
            .iter()
            .map(|&n| derivation_oracle(80e-9, 4e-6, n).unwrap())
            .collect();
        let steps: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.iter().all(|d| d.signum() == steps[0].signum()), "{vals:?}");
        assert!(steps.windows(2).all(|w| w[1].abs() < w[0].abs()), "{vals:?}");
    }

    #[test]
    fn flux_sign_follows_current() {
        let a = oracle_flux(80e-9, 4e-6, 500, 1e-3).unwrap();
        let b = oracle_flux(80e-9, 4e-6, 500, -1e-3).unwrap();
        assert_eq!(a, -b);
        assert!(a > 0.0);
    }

    proptest! {
        #[test]
        fn vacuum_tem_identity(h in 1e-9..1e-5f64, w in 1e-7..1e-3f64) {
            let lc = geometric_inductance_per_length(h, w).unwrap() * capacitance_per_length(w, h).unwrap();
            prop_assert!((lc / (MU_0 * EPS_0) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn fraction_in_unit_interval(k in 0.0..1e-3f64, g in 0.0..1e-3f64) {
            prop_assume!(k > 0.0 || g > 0.0);
            let a = kinetic_fraction(k, g).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
