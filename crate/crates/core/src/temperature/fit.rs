use serde::{Deserialize, Serialize};

use super::model::{qp_shift_unchecked, tls_shift};
use crate::error::{Error, Result};
use crate::lsq::{self, LmOptions, LmResult, LmTrace};
use crate::types::{FixedMask, ParamUncertainty, TempModelParams, TemperatureSeries, Warning};
use crate::units::joules_to_microev;

/// Points colder than this are dropped before fitting.
pub const TEMPERATURE_FLOOR: f64 = 10e-3;
pub const MIN_FIT_POINTS: usize = 5;

const MICROEV: f64 = 1e-6 * crate::constants::ELECTRONVOLT;

/// Which of the kinetic fraction and the gap is held fixed. The two are
/// strongly correlated in the quasiparticle term, so one must be pinned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitStrategy {
    /// Fit `F tan(delta)` and `Delta_0`.
    FixAlpha { alpha: f64 },
    /// Fit `F tan(delta)` and `alpha`; `delta_0` in joules.
    FixDelta { delta_0: f64 },
    /// Run `FixDelta` for every listed gap; the spread of the results is
    /// reported as the uncertainty.
    FixDeltaSweep { delta_0: Vec<f64> },
}

impl FitStrategy {
    pub fn validate(&self) -> Result<()> {
        let gap_ok = |d: f64| d.is_finite() && d > 0.0;
        match self {
            FitStrategy::FixAlpha { alpha } => {
                if !(alpha.is_finite() && (0.0..=1.0).contains(alpha)) {
                    return Err(Error::invalid("fixed alpha must lie in [0, 1]"));
                }
            }
            FitStrategy::FixDelta { delta_0 } => {
                if !gap_ok(*delta_0) {
                    return Err(Error::invalid("fixed gap must be positive"));
                }
            }
            FitStrategy::FixDeltaSweep { delta_0 } => {
                if delta_0.is_empty() || !delta_0.iter().all(|&d| gap_ok(d)) {
                    return Err(Error::invalid("gap sweep needs at least one positive value"));
                }
            }
        }
        Ok(())
    }

    fn fixed_mask(&self) -> FixedMask {
        match self {
            FitStrategy::FixAlpha { .. } => FixedMask {
                alpha: true,
                ..Default::default()
            },
            _ => FixedMask {
                delta_0: true,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    pub params: TempModelParams,
    /// RMS of `(f - f_ref)/f_ref` residuals.
    pub residual_rms: f64,
    pub iterations: usize,
    pub warnings: Vec<Warning>,
    /// Individual fits of a gap sweep, in the order the gaps were given.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<TempModelParams>,
}

/// Model for the normalized data `y = (f - f_ref) / f_ref`.
///
/// With `f_ref` measured at `T_ref`, `f0 = f_ref / (1 + s(T_ref))` and
/// `y(T) = (1 + s(T)) / (1 + s(T_ref)) - 1`, so the reference convention
/// does not bias the fit.
struct ShiftProblem<'a> {
    temps: &'a [f64],
    ys: &'a [f64],
    f_ref: f64,
    t_ref: Option<f64>,
}

impl ShiftProblem<'_> {
    fn shift(&self, t: f64, f0: f64, f_tan: f64, alpha: f64, delta: f64) -> Option<f64> {
        let tls = tls_shift(f0, t, f_tan).ok()?;
        Some(tls + qp_shift_unchecked(t, alpha, delta))
    }

    /// Zero-temperature reference frequency consistent with the parameters.
    fn f0(&self, f_tan: f64, alpha: f64, delta: f64) -> Option<f64> {
        let Some(t_ref) = self.t_ref else {
            return Some(self.f_ref);
        };
        let mut f0 = self.f_ref;
        for _ in 0..4 {
            f0 = self.f_ref / (1.0 + self.shift(t_ref, f0, f_tan, alpha, delta)?);
        }
        Some(f0)
    }

    fn residuals(&self, f_tan: f64, alpha: f64, delta: f64) -> Option<Vec<f64>> {
        if f_tan < 0.0 || delta <= 0.0 {
            return None;
        }
        let f0 = self.f0(f_tan, alpha, delta)?;
        let s_ref = match self.t_ref {
            Some(t) => self.shift(t, f0, f_tan, alpha, delta)?,
            None => 0.0,
        };
        self.temps
            .iter()
            .zip(self.ys)
            .map(|(&t, &y)| Some((1.0 + self.shift(t, f0, f_tan, alpha, delta)?) / (1.0 + s_ref) - 1.0 - y))
            .collect()
    }
}

struct Prepared {
    temps: Vec<f64>,
    ys: Vec<f64>,
    warnings: Vec<Warning>,
}

fn prepare(series: &TemperatureSeries) -> Result<Prepared> {
    let mut warnings = Vec::new();
    let kept: Vec<(f64, f64)> = series
        .relative_shifts()
        .filter(|&(t, _)| t >= TEMPERATURE_FLOOR)
        .collect();
    let dropped = series.len() - kept.len();
    if dropped > 0 {
        log::warn!("dropping {dropped} points below {TEMPERATURE_FLOOR} K");
        warnings.push(Warning::PointsBelowTemperatureFloor { dropped });
    }
    if kept.len() < MIN_FIT_POINTS {
        return Err(Error::invalid(format!(
            "temperature fit needs at least {MIN_FIT_POINTS} points above {TEMPERATURE_FLOOR} K, got {}",
            kept.len()
        )));
    }
    let freqs: Vec<f64> = series.points().iter().map(|p| p.1).collect();
    if freqs.iter().all(|&f| f == freqs[0]) {
        return Err(Error::NoSignal);
    }
    let (temps, ys) = kept.into_iter().unzip();
    Ok(Prepared { temps, ys, warnings })
}

/// Least-squares fit of the frequency-shift model to a temperature series.
///
/// `initial` supplies the starting values for the free parameters; the fit
/// additionally tries a fixed set of starting gaps (or kinetic fractions)
/// and keeps the lowest-cost solution.
pub fn fit_temperature_sweep(
    series: &TemperatureSeries,
    strategy: &FitStrategy,
    initial: &TempModelParams,
) -> Result<TemperatureFit> {
    strategy.validate()?;
    let prep = prepare(series)?;
    let problem = ShiftProblem {
        temps: &prep.temps,
        ys: &prep.ys,
        f_ref: series.f0(),
        t_ref: series.reference_temperature(),
    };
    match strategy {
        FitStrategy::FixAlpha { alpha } => fit_fix_alpha(&problem, *alpha, initial, prep.warnings),
        FitStrategy::FixDelta { delta_0 } => fit_fix_delta(&problem, *delta_0, initial, prep.warnings),
        FitStrategy::FixDeltaSweep { delta_0 } => {
            let fits = delta_0
                .iter()
                .map(|&d| fit_fix_delta(&problem, d, initial, prep.warnings.clone()))
                .collect::<Result<Vec<_>>>()?;
            Ok(combine_sweep(fits, delta_0, strategy.fixed_mask()))
        }
    }
}

fn best_of<F>(starts: &[[f64; 2]], typical: [f64; 2], residuals: F) -> Result<LmResult>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let opts = LmOptions::default();
    let mut best: Option<LmResult> = None;
    let mut first_failure: Option<lsq::LmFailure> = None;
    for start in starts {
        match lsq::minimize(&residuals, start, &typical, &opts) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.cost < b.cost) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_failure.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| {
        let fail = first_failure.unwrap_or(lsq::LmFailure {
            reason: "no starting point was usable".into(),
            trace: LmTrace::default(),
        });
        Error::FitNonConvergence {
            reason: fail.reason,
            trace: fail.trace,
        }
    })
}

/// `F tan(delta)` is fitted through its square root so the optimizer can
/// approach zero without leaving the physical domain.
fn start_root(initial: &TempModelParams) -> f64 {
    if initial.f_tan_delta > 0.0 {
        initial.f_tan_delta.sqrt()
    } else {
        1e-2
    }
}

fn rms(r: &[f64]) -> f64 {
    (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
}

fn fit_fix_alpha(
    problem: &ShiftProblem,
    alpha: f64,
    initial: &TempModelParams,
    warnings: Vec<Warning>,
) -> Result<TemperatureFit> {
    // Parameters: [sqrt(F tan(delta)), Delta_0 in ueV]
    let s0 = start_root(initial);
    let mut starts = vec![[s0, joules_to_microev(initial.delta_0)]];
    starts.extend([50.0, 100.0, 200.0, 400.0, 800.0].map(|d| [s0, d]));
    let res = best_of(&starts, [1e-2, 100.0], |p| {
        problem.residuals(p[0] * p[0], alpha, p[1] * MICROEV)
    })?;

    let (f_tan, delta) = (res.params[0] * res.params[0], res.params[1] * MICROEV);
    let errs = res.standard_errors();
    let params = TempModelParams {
        f_tan_delta: f_tan,
        delta_0: delta,
        alpha,
        f0: problem.f0(f_tan, alpha, delta).unwrap_or(problem.f_ref),
        fixed: FixedMask {
            alpha: true,
            ..Default::default()
        },
        uncertainties: ParamUncertainty {
            f_tan_delta: errs.as_ref().map(|e| 2.0 * res.params[0].abs() * e[0]),
            delta_0: errs.as_ref().map(|e| e[1] * MICROEV),
            alpha: None,
        },
    };
    Ok(TemperatureFit {
        params,
        residual_rms: rms(&res.residuals),
        iterations: res.iterations,
        warnings,
        sweep: Vec::new(),
    })
}

fn fit_fix_delta(
    problem: &ShiftProblem,
    delta: f64,
    initial: &TempModelParams,
    mut warnings: Vec<Warning>,
) -> Result<TemperatureFit> {
    // Parameters: [sqrt(F tan(delta)), alpha]
    let s0 = start_root(initial);
    let mut starts = vec![[s0, initial.alpha]];
    starts.extend([0.1, 0.5, 0.9].map(|a| [s0, a]));
    let res = best_of(&starts, [1e-2, 1.0], |p| problem.residuals(p[0] * p[0], p[1], delta))?;

    let f_tan = res.params[0] * res.params[0];
    let raw_alpha = res.params[1];
    let alpha = raw_alpha.clamp(0.0, 1.0);
    if alpha != raw_alpha {
        log::warn!("fitted alpha {raw_alpha} clamped to {alpha}");
        warnings.push(Warning::AlphaClamped { raw: raw_alpha });
    }
    let errs = res.standard_errors();
    let params = TempModelParams {
        f_tan_delta: f_tan,
        delta_0: delta,
        alpha,
        f0: problem.f0(f_tan, alpha, delta).unwrap_or(problem.f_ref),
        fixed: FixedMask {
            delta_0: true,
            ..Default::default()
        },
        uncertainties: ParamUncertainty {
            f_tan_delta: errs.as_ref().map(|e| 2.0 * res.params[0].abs() * e[0]),
            delta_0: None,
            alpha: errs.as_ref().map(|e| e[1]),
        },
    };
    Ok(TemperatureFit {
        params,
        residual_rms: rms(&res.residuals),
        iterations: res.iterations,
        warnings,
        sweep: Vec::new(),
    })
}

fn half_range(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    0.5 * (hi - lo)
}

/// Central fit (gap closest to the mean of the listed gaps) with half the
/// range across the sweep as uncertainty.
fn combine_sweep(fits: Vec<TemperatureFit>, gaps: &[f64], fixed: FixedMask) -> TemperatureFit {
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let center = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - mean_gap).abs().total_cmp(&(b.1 - mean_gap).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let sweep: Vec<TempModelParams> = fits.iter().map(|f| f.params).collect();
    let mut params = sweep[center];
    params.fixed = fixed;
    params.uncertainties = ParamUncertainty {
        f_tan_delta: Some(half_range(sweep.iter().map(|p| p.f_tan_delta))),
        delta_0: Some(half_range(gaps.iter().copied())),
        alpha: Some(half_range(sweep.iter().map(|p| p.alpha))),
    };
    let mut warnings: Vec<Warning> = Vec::new();
    for f in &fits {
        for w in &f.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
    }
    TemperatureFit {
        params,
        residual_rms: fits[center].residual_rms,
        iterations: fits.iter().map(|f| f.iterations).sum(),
        warnings,
        sweep,
    }
}
