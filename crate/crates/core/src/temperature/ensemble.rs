use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ParamUncertainty, TempModelParams};

/// Statistics over a group of resonators fitted with the same strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFit {
    pub per_resonator: Vec<TempModelParams>,
    pub mean: TempModelParams,
    /// Sample standard deviation (n - 1 denominator) of each free field;
    /// `None` for fields held fixed.
    pub spread: ParamUncertainty,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn ensemble_statistics(fits: &[TempModelParams]) -> Result<EnsembleFit> {
    if fits.len() < 2 {
        return Err(Error::invalid(format!(
            "ensemble statistics need at least 2 fits, got {}",
            fits.len()
        )));
    }
    let fixed = fits[0].fixed;
    if fits.iter().any(|p| p.fixed != fixed) {
        return Err(Error::InconsistentEnsemble);
    }
    let column = |get: fn(&TempModelParams) -> f64| -> Vec<f64> { fits.iter().map(get).collect() };
    let (f_tan, f_tan_sd) = mean_std(&column(|p| p.f_tan_delta));
    let (delta, delta_sd) = mean_std(&column(|p| p.delta_0));
    let (alpha, alpha_sd) = mean_std(&column(|p| p.alpha));
    let (f0, _) = mean_std(&column(|p| p.f0));
    let spread = ParamUncertainty {
        f_tan_delta: (!fixed.f_tan_delta).then_some(f_tan_sd),
        delta_0: (!fixed.delta_0).then_some(delta_sd),
        alpha: (!fixed.alpha).then_some(alpha_sd),
    };
    let mean = TempModelParams {
        f_tan_delta: f_tan,
        delta_0: delta,
        alpha,
        f0,
        fixed,
        uncertainties: spread,
    };
    Ok(EnsembleFit {
        per_resonator: fits.to_vec(),
        mean,
        spread,
    })
}
