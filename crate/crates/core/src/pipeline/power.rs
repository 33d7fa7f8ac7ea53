use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{PowerReference, RunConfig, SweepEntry};
use super::envelope::{bin_envelope, serialize_bins, BinAxis, EnvelopeCurve};
use super::io::load_sweep;
use super::report::{loss_comparison, LossComparison};
use crate::calibration::{incident_power, incident_power_from_output_gain, photon_number};
use crate::error::{Error, Result};
use crate::notch::fit_notch;
use crate::types::{ComplexSweep, Warning};

/// Photon number below which a fit counts toward the low-power plateau.
pub const LOW_POWER_PHOTONS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub resonator: String,
    pub group: String,
    pub path: String,
    pub drive_dbm: f64,
    pub incident_power_w: f64,
    pub n_bar: f64,
    pub f_r: f64,
    pub q_l: f64,
    pub q_c_mag: f64,
    pub phi: f64,
    pub q_int: f64,
    pub residual_rms: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub resonator: String,
    pub path: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSummary {
    pub name: String,
    pub group: String,
    pub fits: usize,
    /// Mean internal Q over fits below one photon, or the lowest-power fit
    /// if none reach that regime.
    pub low_power_q_int: f64,
    pub low_power_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupEnvelope {
    pub group: String,
    pub bins: usize,
    pub axis: BinAxis,
    pub curves: usize,
    #[serde(rename = "bin", serialize_with = "serialize_bins")]
    pub envelope: EnvelopeCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSweepReport {
    pub status: String,
    pub calibration: PowerReference,
    pub fit_count: usize,
    pub failure_count: usize,
    pub fits: Vec<FitRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FitFailure>,
    pub resonators: Vec<ResonatorSummary>,
    pub envelopes: Vec<GroupEnvelope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_comparison: Option<LossComparison>,
}

fn fit_one(entry: &SweepEntry, sweep: &ComplexSweep, calibration: PowerReference) -> Result<FitRow> {
    let drive_dbm = entry
        .drive_dbm
        .or(sweep.drive_power_dbm())
        .ok_or_else(|| Error::invalid("sweep has no drive power"))?;
    let fit = fit_notch(sweep)?;
    let p_inc = match calibration {
        PowerReference::Attenuation { input_attenuation_db } => incident_power(drive_dbm, input_attenuation_db)?,
        PowerReference::OutputGain { gain_db } => {
            incident_power_from_output_gain(drive_dbm, fit.background_amp, gain_db)?
        }
    };
    let n_bar = photon_number(fit.q_l, fit.q_c_mag, fit.f_r, p_inc)?;
    Ok(FitRow {
        resonator: entry.resonator.clone(),
        group: entry.group.clone(),
        path: entry.path.display().to_string(),
        drive_dbm,
        incident_power_w: p_inc,
        n_bar,
        f_r: fit.f_r,
        q_l: fit.q_l,
        q_c_mag: fit.q_c_mag,
        phi: fit.phi,
        q_int: fit.q_int,
        residual_rms: fit.residual_rms,
        warnings: fit.warnings,
    })
}

fn process_entry(cfg: &RunConfig, entry: &SweepEntry, calibration: PowerReference) -> Vec<Result<FitRow, FitFailure>> {
    let fail = |e: Error| FitFailure {
        resonator: entry.resonator.clone(),
        path: entry.path.display().to_string(),
        error: e.to_string(),
    };
    let format = entry.format.unwrap_or(cfg.input.format);
    match load_sweep(&cfg.resolve(&entry.path), format) {
        Ok(sweeps) => sweeps
            .iter()
            .map(|s| {
                fit_one(entry, s, calibration).map_err(|e| {
                    log::warn!("fit failed for {}: {e}", entry.path.display());
                    fail(e)
                })
            })
            .collect(),
        Err(e) => {
            log::warn!("could not load {}: {e}", entry.path.display());
            vec![Err(fail(e))]
        }
    }
}

/// Fit every configured sweep, convert drive power to photon number and
/// bin `Q_int(n)` per group.
pub fn run_power_sweep(cfg: &RunConfig) -> Result<PowerSweepReport> {
    let ps = cfg
        .power_sweep
        .as_ref()
        .ok_or_else(|| Error::Config("no [power_sweep] section".into()))?;
    let calibration = cfg
        .calibration
        .as_ref()
        .ok_or_else(|| Error::Config("power sweep needs a [calibration] section".into()))?
        .resolve()?;

    let mut entries: Vec<&SweepEntry> = ps.sweeps.iter().collect();
    entries.sort_by(|a, b| (&a.path, &a.resonator).cmp(&(&b.path, &b.resonator)));

    let outcomes: Vec<Vec<Result<FitRow, FitFailure>>> =
        entries.par_iter().map(|e| process_entry(cfg, e, calibration)).collect();

    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes.into_iter().flatten() {
        match o {
            Ok(row) => fits.push(row),
            Err(f) => failures.push(f),
        }
    }
    let total = fits.len() + failures.len();
    if total > 0 && 2 * failures.len() > total {
        return Err(Error::RunFailed {
            failed: failures.len(),
            total,
        });
    }

    let mut per_resonator: BTreeMap<(String, String), Vec<&FitRow>> = BTreeMap::new();
    for row in &fits {
        per_resonator
            .entry((row.group.clone(), row.resonator.clone()))
            .or_default()
            .push(row);
    }
    let resonators: Vec<ResonatorSummary> = per_resonator
        .iter()
        .map(|((group, name), rows)| {
            let low: Vec<f64> = rows
                .iter()
                .filter(|r| r.n_bar < LOW_POWER_PHOTONS)
                .map(|r| r.q_int)
                .collect();
            let (q, count) = if low.is_empty() {
                let lowest = rows
                    .iter()
                    .min_by(|a, b| a.n_bar.total_cmp(&b.n_bar))
                    .expect("group has at least one row");
                (lowest.q_int, 1)
            } else {
                (low.iter().sum::<f64>() / low.len() as f64, low.len())
            };
            ResonatorSummary {
                name: name.clone(),
                group: group.clone(),
                fits: rows.len(),
                low_power_q_int: q,
                low_power_points: count,
            }
        })
        .collect();

    let mut groups: BTreeMap<&str, Vec<Vec<(f64, f64)>>> = BTreeMap::new();
    for ((group, _), rows) in &per_resonator {
        let mut curve: Vec<(f64, f64)> = rows.iter().map(|r| (r.n_bar, r.q_int)).collect();
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        groups.entry(group.as_str()).or_default().push(curve);
    }
    let envelopes = groups
        .into_iter()
        .map(|(group, curves)| {
            let b = cfg.binning_for(group);
            Ok(GroupEnvelope {
                group: group.to_string(),
                bins: b.bins,
                axis: b.axis,
                curves: curves.len(),
                envelope: bin_envelope(&curves, b.bins, b.axis)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let loss = (!resonators.is_empty()).then(|| {
        let mean_q = resonators.iter().map(|r| r.low_power_q_int).sum::<f64>() / resonators.len() as f64;
        loss_comparison(1.0 / mean_q)
    });

    Ok(PowerSweepReport {
        status: if fits.is_empty() { "no fits".into() } else { "ok".into() },
        calibration,
        fit_count: fits.len(),
        failure_count: failures.len(),
        fits,
        failures,
        resonators,
        envelopes,
        loss_comparison: loss,
    })
}
