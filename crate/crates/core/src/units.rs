//! Unit conversions at the library boundary. Everything internal is SI.

use crate::constants::ELECTRONVOLT;
use crate::error::{ensure_finite, Error, Result};

pub fn dbm_to_watts(p_dbm: f64) -> Result<f64> {
    let p = ensure_finite(p_dbm, "power in dBm")?;
    Ok(1e-3 * 10f64.powf(p / 10.0))
}

pub fn watts_to_dbm(p_watts: f64) -> Result<f64> {
    let p = ensure_finite(p_watts, "power in W")?;
    if p <= 0.0 {
        return Err(Error::invalid(format!(
            "power must be positive to express in dBm, got {p}"
        )));
    }
    Ok(10.0 * (p / 1e-3).log10())
}

pub fn db_to_linear(db: f64) -> Result<f64> {
    let db = ensure_finite(db, "gain in dB")?;
    Ok(10f64.powf(db / 10.0))
}

pub fn linear_to_db(ratio: f64) -> Result<f64> {
    let r = ensure_finite(ratio, "linear ratio")?;
    if r <= 0.0 {
        return Err(Error::invalid(format!("ratio must be positive, got {r}")));
    }
    Ok(10.0 * r.log10())
}

pub fn microev_to_joules(e_microev: f64) -> Result<f64> {
    let e = ensure_finite(e_microev, "energy in ueV")?;
    if e < 0.0 {
        return Err(Error::invalid(format!("energy must be non-negative, got {e} ueV")));
    }
    Ok(e * 1e-6 * ELECTRONVOLT)
}

pub fn joules_to_microev(e_joules: f64) -> f64 {
    e_joules / (1e-6 * ELECTRONVOLT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn dbm_reference_points() {
        assert_relative_eq!(dbm_to_watts(0.0).unwrap(), 1.0e-3, max_relative = 1e-15);
        assert_relative_eq!(dbm_to_watts(-30.0).unwrap(), 1.0e-6, max_relative = 1e-15);
        assert_relative_eq!(dbm_to_watts(10.0).unwrap(), 1.0e-2, max_relative = 1e-15);
    }

    #[test]
    fn dbm_rejects_non_finite() {
        assert!(dbm_to_watts(f64::NAN).is_err());
        assert!(dbm_to_watts(f64::INFINITY).is_err());
        assert!(watts_to_dbm(0.0).is_err());
    }

    #[test]
    fn microev_conversions() {
        assert_eq!(microev_to_joules(0.0).unwrap(), 0.0);
        // 351 ueV and 210 ueV times the exact CODATA electronvolt
        assert_relative_eq!(
            microev_to_joules(351.0).unwrap(),
            5.62363998534e-23,
            max_relative = 1e-11
        );
        assert_relative_eq!(
            microev_to_joules(210.0).unwrap(),
            3.3645709314e-23,
            max_relative = 1e-11
        );
        assert!(microev_to_joules(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn dbm_round_trip(p in -160.0f64..30.0) {
            let back = watts_to_dbm(dbm_to_watts(p).unwrap()).unwrap();
            prop_assert!((back - p).abs() <= 1e-12 * p.abs().max(1.0));
        }
    }
}
