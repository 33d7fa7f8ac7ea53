use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hanger-coupled resonator transmission with a cable background:
///
/// `S21(f) = a e^{i theta} e^{-2 pi i f tau} [1 - (Q_l/|Q_c|) e^{i phi} / (1 + 2i Q_l (f/f_r - 1))]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchModel {
    pub amplitude: f64,
    pub phase: f64,
    pub cable_delay: f64,
    pub q_l: f64,
    pub q_c_mag: f64,
    pub phi: f64,
    pub f_r: f64,
}

impl NotchModel {
    /// Model without background (a = 1, theta = 0, tau = 0).
    pub fn bare(f_r: f64, q_l: f64, q_c_mag: f64, phi: f64) -> Self {
        Self {
            amplitude: 1.0,
            phase: 0.0,
            cable_delay: 0.0,
            q_l,
            q_c_mag,
            phi,
            f_r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.amplitude,
            self.phase,
            self.cable_delay,
            self.q_l,
            self.q_c_mag,
            self.phi,
            self.f_r,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "notch model parameters",
            });
        }
        if self.q_l <= 0.0 || self.f_r <= 0.0 || self.amplitude <= 0.0 {
            return Err(Error::invalid("Q_l, f_r and amplitude must be positive"));
        }
        // |Q_c| = inf (ratio 0) is the no-resonance limit and is allowed.
        if self.q_c_mag <= 0.0 {
            return Err(Error::invalid("|Q_c| must be positive"));
        }
        Ok(())
    }

    /// Coupling ratio `Q_l / |Q_c|` (the normalized circle diameter).
    pub fn coupling_ratio(&self) -> f64 {
        self.q_l / self.q_c_mag
    }

    pub fn resonance(&self, f: f64) -> Complex64 {
        let x = (f - self.f_r) / self.f_r;
        let denom = Complex64::new(1.0, 2.0 * self.q_l * x);
        Complex64::new(1.0, 0.0) - self.coupling_ratio() * Complex64::from_polar(1.0, self.phi) / denom
    }

    pub fn background(&self, f: f64) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase - 2.0 * PI * f * self.cable_delay)
    }

    pub fn s21(&self, f: f64) -> Complex64 {
        self.background(f) * self.resonance(f)
    }
}

/// Result of combining loaded and coupling quality factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InternalQ {
    Finite(f64),
    /// `1/Q_l - cos(phi)/|Q_c| <= 0`: no positive internal Q is consistent
    /// with the inputs.
    OutOfModel,
}

impl InternalQ {
    pub fn value(self) -> Option<f64> {
        match self {
            InternalQ::Finite(q) => Some(q),
            InternalQ::OutOfModel => None,
        }
    }
}

/// `1/Q_int = 1/Q_l - cos(phi)/|Q_c|` (diameter-corrected rule).
pub fn internal_q(q_l: f64, q_c_mag: f64, phi: f64) -> Result<InternalQ> {
    if !(q_l.is_finite() && q_c_mag.is_finite() && phi.is_finite()) {
        return Err(Error::NonFinite {
            what: "quality factors",
        });
    }
    if q_l <= 0.0 || q_c_mag <= 0.0 {
        return Err(Error::invalid("Q_l and |Q_c| must be positive"));
    }
    let inv = 1.0 / q_l - phi.cos() / q_c_mag;
    if inv <= 0.0 {
        Ok(InternalQ::OutOfModel)
    } else {
        Ok(InternalQ::Finite(1.0 / inv))
    }
}
