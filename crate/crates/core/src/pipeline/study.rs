use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, StrategyConfig, TemperatureGroupConfig, TemperatureResonatorConfig};
use super::io::{load_sweep, load_temperature_series};
use super::power::FitFailure;
use crate::error::{Error, Result};
use crate::notch::fit_notch;
use crate::temperature::{critical_temperature, ensemble_statistics, fit_temperature_sweep, TemperatureFit};
use crate::types::{TempModelParams, TemperatureSeries, Warning};
use crate::units::joules_to_microev;

/// A value with its one-sigma uncertainty in compact `value(unc)` form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueUnc {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<f64>,
    pub display: String,
}

impl ValueUnc {
    pub fn new(value: f64, uncertainty: Option<f64>) -> Self {
        Self {
            value,
            uncertainty,
            display: format_uncertainty(value, uncertainty),
        }
    }
}

/// Concise notation: `351(2)`, `210(20)`, `0.999(1)`, `5.9(3)e-4`.
pub fn format_uncertainty(value: f64, unc: Option<f64>) -> String {
    let exp = if value != 0.0 && (value.abs() < 1e-2 || value.abs() >= 1e4) {
        value.abs().log10().floor() as i32
    } else {
        0
    };
    let scale = 10f64.powi(exp);
    let v = value / scale;
    let suffix = if exp != 0 { format!("e{exp}") } else { String::new() };
    let Some(u) = unc.filter(|u| u.is_finite() && *u > 0.0) else {
        return format!("{}{suffix}", format_sig(v, 4));
    };
    let u = u / scale;
    let mut e = u.log10().floor() as i32;
    // a leading 1 gets a second digit when the value would otherwise keep
    // fewer than two significant digits
    let ev = v.abs().log10().floor() as i32;
    if (u / 10f64.powi(e)).round() < 2.0 && e >= ev {
        e -= 1;
    }
    let digits = (u / 10f64.powi(e)).round();
    if e < 0 {
        let decimals = (-e) as usize;
        format!("{v:.decimals$}({}){suffix}", digits as i64)
    } else {
        let step = 10f64.powi(e);
        let vr = (v / step).round() * step;
        format!("{vr:.0}({}){suffix}", (digits * step) as i64)
    }
}

fn format_sig(v: f64, sig: i32) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let decimals = (sig - 1 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorTempRow {
    pub name: String,
    pub group: String,
    pub points: usize,
    pub f0_hz: f64,
    pub f_tan_delta: ValueUnc,
    pub delta_0_uev: ValueUnc,
    pub alpha: ValueUnc,
    pub residual_rms: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub strategy: StrategyConfig,
    pub resonators: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
    pub f_tan_delta: ValueUnc,
    pub delta_0_uev: ValueUnc,
    pub alpha: ValueUnc,
    pub critical_temperature_k: ValueUnc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureReport {
    pub status: String,
    pub groups: Vec<GroupSummary>,
    pub resonators: Vec<ResonatorTempRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FitFailure>,
    /// Plot data, written to a separate delimited file.
    #[serde(skip)]
    pub curves: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub group: String,
    pub resonator: String,
    pub temperature_k: f64,
    pub measured_shift: f64,
    pub model_shift: f64,
}

fn build_series(cfg: &RunConfig, r: &TemperatureResonatorConfig) -> Result<(TemperatureSeries, usize)> {
    if let Some(p) = &r.series {
        return Ok((load_temperature_series(&cfg.resolve(p))?, 0));
    }
    let mut points = Vec::new();
    let mut failed = 0;
    for s in &r.sweeps {
        let fitted = load_sweep(&cfg.resolve(&s.path), cfg.input.format)
            .and_then(|sw| {
                sw.first()
                    .cloned()
                    .ok_or_else(|| Error::EmptyInput("sweep file".into()))
            })
            .and_then(|sw| fit_notch(&sw));
        match fitted {
            Ok(fit) => points.push((s.temperature_k, fit.f_r)),
            Err(e) => {
                log::warn!("sweep {} at {} K failed: {e}", s.path.display(), s.temperature_k);
                failed += 1;
            }
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok((TemperatureSeries::new(points)?, failed))
}

fn fit_resonator(
    cfg: &RunConfig,
    r: &TemperatureResonatorConfig,
    group: &TemperatureGroupConfig,
) -> Result<(TemperatureSeries, TemperatureFit)> {
    let (series, failed) = build_series(cfg, r)?;
    if failed > 0 {
        log::warn!("{}: {failed} temperature sweeps could not be fitted", r.name);
    }
    let strategy = group.strategy.to_strategy()?;
    let initial = group.initial.params(series.f0())?;
    let fit = fit_temperature_sweep(&series, &strategy, &initial)?;
    Ok((series, fit))
}

fn row(name: &str, group: &str, series: &TemperatureSeries, fit: &TemperatureFit) -> ResonatorTempRow {
    let p = &fit.params;
    let u = &p.uncertainties;
    ResonatorTempRow {
        name: name.to_string(),
        group: group.to_string(),
        points: series.len(),
        f0_hz: p.f0,
        f_tan_delta: ValueUnc::new(p.f_tan_delta, u.f_tan_delta),
        delta_0_uev: ValueUnc::new(joules_to_microev(p.delta_0), u.delta_0.map(joules_to_microev)),
        alpha: ValueUnc::new(p.alpha, u.alpha),
        residual_rms: fit.residual_rms,
        warnings: fit.warnings.clone(),
    }
}

fn summarize(group: &TemperatureGroupConfig, fits: &[TempModelParams]) -> Result<GroupSummary> {
    let sweep_strategy = matches!(group.strategy, StrategyConfig::FixDeltaSweep { .. });
    let (mean, spread, notice) = if fits.len() >= 2 {
        let e = ensemble_statistics(fits)?;
        (e.mean, e.spread, None)
    } else {
        let notice = "single resonator: ensemble statistics skipped".to_string();
        log::info!("group {}: {notice}", group.name);
        (fits[0], Default::default(), Some(notice))
    };
    // For a gap sweep the spread across the sweep is the reported
    // uncertainty whenever it exceeds the scatter between resonators.
    let combine = |ens: Option<f64>, sweep: Vec<Option<f64>>| -> Option<f64> {
        if !sweep_strategy {
            return ens;
        }
        let vals: Vec<f64> = sweep.into_iter().flatten().collect();
        let mean_sweep = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
        match (ens, mean_sweep) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    };
    let f_unc = combine(
        spread.f_tan_delta,
        fits.iter().map(|p| p.uncertainties.f_tan_delta).collect(),
    );
    let d_unc = combine(spread.delta_0, fits.iter().map(|p| p.uncertainties.delta_0).collect());
    let a_unc = combine(spread.alpha, fits.iter().map(|p| p.uncertainties.alpha).collect());
    let t_c = critical_temperature(mean.delta_0)?;
    let t_c_unc = d_unc.map(critical_temperature).transpose()?;
    Ok(GroupSummary {
        name: group.name.clone(),
        strategy: group.strategy.clone(),
        resonators: fits.len(),
        notice,
        f_tan_delta: ValueUnc::new(mean.f_tan_delta, f_unc),
        delta_0_uev: ValueUnc::new(joules_to_microev(mean.delta_0), d_unc.map(joules_to_microev)),
        alpha: ValueUnc::new(mean.alpha, a_unc),
        critical_temperature_k: ValueUnc::new(t_c, t_c_unc),
    })
}

/// Fit every configured resonator with its group's strategy and collect
/// per-group statistics in the layout of a parameter table.
pub fn run_temperature_study(cfg: &RunConfig) -> Result<TemperatureReport> {
    let tc = cfg
        .temperature
        .as_ref()
        .ok_or_else(|| Error::Config("no [temperature] section".into()))?;
    let mut resonators: Vec<&TemperatureResonatorConfig> = tc.resonators.iter().collect();
    resonators.sort_by(|a, b| (&a.group, &a.name).cmp(&(&b.group, &b.name)));

    let outcomes: Vec<_> = resonators
        .par_iter()
        .map(|r| {
            let group = tc.groups.iter().find(|g| g.name == r.group).expect("validated group");
            fit_resonator(cfg, r, group)
        })
        .collect();

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut failures = Vec::new();
    let mut fitted: Vec<(&str, TempModelParams)> = Vec::new();
    for (r, outcome) in resonators.iter().zip(outcomes) {
        match outcome {
            Ok((series, fit)) => {
                let p = fit.params;
                for &(t, f) in series.points() {
                    curves.push(CurvePoint {
                        group: r.group.clone(),
                        resonator: r.name.clone(),
                        temperature_k: t,
                        measured_shift: (f - p.f0) / p.f0,
                        model_shift: crate::temperature::model_shift(t, &p).unwrap_or(f64::NAN),
                    });
                }
                rows.push(row(&r.name, &r.group, &series, &fit));
                fitted.push((r.group.as_str(), p));
            }
            Err(e) => {
                log::warn!("temperature fit failed for {}: {e}", r.name);
                failures.push(FitFailure {
                    resonator: r.name.clone(),
                    path: r
                        .series
                        .as_ref()
                        .map(|p| p.display().to_string())
                        .unwrap_or_else(|| "<sweeps>".into()),
                    error: e.to_string(),
                });
            }
        }
    }
    let total = rows.len() + failures.len();
    if total > 0 && 2 * failures.len() > total {
        return Err(Error::RunFailed {
            failed: failures.len(),
            total,
        });
    }

    let mut groups = Vec::new();
    for g in &tc.groups {
        let fits: Vec<TempModelParams> = fitted.iter().filter(|(n, _)| *n == g.name).map(|(_, p)| *p).collect();
        if !fits.is_empty() {
            groups.push(summarize(g, &fits)?);
        }
    }
    Ok(TemperatureReport {
        status: if rows.is_empty() { "no fits".into() } else { "ok".into() },
        groups,
        resonators: rows,
        failures,
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncertainty_notation() {
        assert_eq!(format_uncertainty(351.0, Some(2.0)), "351(2)");
        assert_eq!(format_uncertainty(210.0, Some(20.0)), "210(20)");
        assert_eq!(format_uncertainty(0.999, Some(0.001)), "0.999(1)");
        assert_eq!(format_uncertainty(0.6, Some(0.3)), "0.6(3)");
        assert_eq!(format_uncertainty(5.9e-4, Some(0.3e-4)), "5.9(3)e-4");
        assert_eq!(format_uncertainty(2.31, Some(0.02)), "2.31(2)");
        assert_eq!(format_uncertainty(2.5e-4, Some(1.0e-4)), "2.5(10)e-4");
        assert_eq!(format_uncertainty(351.0, None), "351.0");
    }
}
