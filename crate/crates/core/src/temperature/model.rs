use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{BOLTZMANN, PLANCK};
use crate::digamma::complex_digamma;
use crate::error::{Error, Result};
use crate::types::TempModelParams;

/// Weak-coupling BCS ratio `2 Delta / (k_B T_c)`.
pub const BCS_RATIO: f64 = 3.53;

/// Relative frequency shift from resonant coupling to two-level systems:
///
/// `(F tan(delta) / pi) (Re psi(1/2 + h f / (2 pi i k_B T)) - ln(h f / (2 pi k_B T)))`
///
/// Depends on `f` and `T` only through `f / T`. At `T = 0` the bracket
/// vanishes and the shift is exactly zero.
pub fn tls_shift(f: f64, t: f64, f_tan_delta: f64) -> Result<f64> {
    if !(f.is_finite() && t.is_finite() && f_tan_delta.is_finite()) {
        return Err(Error::NonFinite {
            what: "TLS shift inputs",
        });
    }
    if f <= 0.0 || t < 0.0 || f_tan_delta < 0.0 {
        return Err(Error::invalid("TLS shift needs f > 0, T >= 0, F tan(delta) >= 0"));
    }
    if t == 0.0 || f_tan_delta == 0.0 {
        return Ok(0.0);
    }
    let y = PLANCK * f / (2.0 * PI * BOLTZMANN * t);
    // 1/2 + y/i = 1/2 - i y
    let psi = complex_digamma(Complex64::new(0.5, -y))?;
    Ok(f_tan_delta / PI * (psi.re - y.ln()))
}

/// Relative frequency shift from thermal quasiparticles (Mattis-Bardeen,
/// low-temperature limit):
///
/// `-(alpha / 2) sqrt(pi Delta_0 / (2 k_B T)) exp(-Delta_0 / (k_B T))`
pub fn qp_shift(t: f64, alpha: f64, delta_0: f64) -> Result<f64> {
    if !(t.is_finite() && alpha.is_finite() && delta_0.is_finite()) {
        return Err(Error::NonFinite {
            what: "quasiparticle shift inputs",
        });
    }
    if t <= 0.0 || delta_0 <= 0.0 || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(
            "quasiparticle shift needs T > 0, Delta > 0, alpha in [0, 1]",
        ));
    }
    Ok(qp_shift_unchecked(t, alpha, delta_0))
}

/// Same as [`qp_shift`] without range checks; used inside fits where alpha
/// may temporarily leave [0, 1].
pub(crate) fn qp_shift_unchecked(t: f64, alpha: f64, delta_0: f64) -> f64 {
    let x = delta_0 / (BOLTZMANN * t);
    -(alpha / 2.0) * (PI * x / 2.0).sqrt() * (-x).exp()
}

/// `(f(T) - f0) / f0 = tls_shift(f0, T) + qp_shift(T)`.
pub fn model_shift(t: f64, params: &TempModelParams) -> Result<f64> {
    params.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    let tls = tls_shift(params.f0, t, params.f_tan_delta)?;
    let qp = qp_shift(t, params.alpha, params.delta_0)?;
    Ok(tls + qp)
}

/// `T_c = 2 Delta_0 / (3.53 k_B)`.
pub fn critical_temperature(delta_0: f64) -> Result<f64> {
    if !delta_0.is_finite() {
        return Err(Error::NonFinite {
            what: "superconducting gap",
        });
    }
    if delta_0 < 0.0 {
        return Err(Error::invalid("superconducting gap must be non-negative"));
    }
    Ok(2.0 * delta_0 / (BCS_RATIO * BOLTZMANN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::microev_to_joules;

    fn gral() -> TempModelParams {
        TempModelParams::new(5.9e-4, microev_to_joules(351.0).unwrap(), 0.999, 5e9).unwrap()
    }

    fn al() -> TempModelParams {
        TempModelParams::new(2.5e-4, microev_to_joules(210.0).unwrap(), 0.6, 8e9).unwrap()
    }

    #[test]
    fn zero_coefficients_vanish() {
        assert_eq!(tls_shift(5e9, 0.2, 0.0).unwrap(), 0.0);
        assert_eq!(qp_shift(0.3, 0.0, 1e-23).unwrap(), 0.0);
        let p = TempModelParams::new(0.0, 1e-23, 0.0, 5e9).unwrap();
        for k in 1..50 {
            assert_eq!(model_shift(0.02 * k as f64, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn tls_low_temperature_limit() {
        let f_tan = 5.9e-4;
        assert_eq!(tls_shift(5e9, 0.0, f_tan).unwrap(), 0.0);
        let v = tls_shift(5e9, 1e-6, f_tan).unwrap();
        assert!(v.abs() < 1e-8 * f_tan, "{v}");
    }

    #[test]
    fn tls_dips_then_rises() {
        // Between 10 mK and 1 K at 5 GHz the TLS term has a single minimum
        // (near 0.1 K) and rises strictly on either side of it.
        let ts: Vec<f64> = (0..=990).map(|k| 0.01 + 0.001 * k as f64).collect();
        let v: Vec<f64> = ts.iter().map(|&t| tls_shift(5e9, t, 5.9e-4).unwrap()).collect();
        let imin = v.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let tmin = ts[imin];
        assert!((0.07..0.13).contains(&tmin), "minimum at {tmin}");
        assert!(v[..=imin].windows(2).all(|w| w[1] < w[0]));
        assert!(v[imin..].windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tls_depends_on_ratio_only() {
        for &(f, t) in &[(5e9, 0.1), (8e9, 0.03), (4.2e9, 0.7)] {
            let a = tls_shift(f, t, 3e-4).unwrap();
            for c in [0.5, 3.0, 17.0] {
                let b = tls_shift(c * f, c * t, 3e-4).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn qp_sign_and_monotonicity() {
        let delta = microev_to_joules(210.0).unwrap();
        let t_max = delta / BOLTZMANN;
        let mut prev = 0.0;
        for k in 1..=2000 {
            let t = 0.03 + (t_max - 0.03) * k as f64 / 2000.0;
            let v = qp_shift(t, 0.6, delta).unwrap();
            assert!(v <= 0.0);
            assert!(v < prev, "not decreasing at {t}");
            prev = v;
        }
        assert_eq!(qp_shift(0.001, 0.6, delta).unwrap(), -0.0);
    }

    #[test]
    fn qp_matches_high_precision_value() {
        // 50-digit evaluation of the same expression with CODATA constants
        let v = qp_shift(0.7, 0.999, microev_to_joules(351.0).unwrap()).unwrap();
        let reference = -0.004_486_676_417_767_821;
        assert!((v / reference - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn decomposition_is_exact() {
        let p = gral();
        for k in 1..30 {
            let t = 0.025 * k as f64;
            let total = model_shift(t, &p).unwrap();
            let sum = tls_shift(p.f0, t, p.f_tan_delta).unwrap() + qp_shift(t, p.alpha, p.delta_0).unwrap();
            assert_eq!(total.to_bits(), sum.to_bits());
        }
    }

    #[test]
    fn gral_shape() {
        let p = gral();
        let positive = (100..=400).any(|mk| model_shift(mk as f64 * 1e-3, &p).unwrap() > 0.0);
        assert!(positive);
        assert!(model_shift(0.7, &p).unwrap() < 0.0);
    }

    #[test]
    fn quasiparticle_onset_earlier_for_al() {
        let first_below = |p: &TempModelParams| {
            (10..=1000)
                .map(|mk| mk as f64 * 1e-3)
                .find(|&t| qp_shift(t, p.alpha, p.delta_0).unwrap() < -1e-5)
                .unwrap()
        };
        assert!(first_below(&al()) < first_below(&gral()));
    }

    #[test]
    fn critical_temperatures() {
        let tc = critical_temperature(microev_to_joules(351.0).unwrap()).unwrap();
        assert!((tc - 2.31).abs() <= 0.01);
        assert_eq!(critical_temperature(0.0).unwrap(), 0.0);
        let tc = critical_temperature(microev_to_joules(210.0).unwrap()).unwrap();
        assert!((tc - 1.380_707_538_541_37).abs() < 1e-9);
        assert!(critical_temperature(-1e-23).is_err());
    }
}
