use std::f64::consts::PI;

use num_complex::Complex64;

use super::background::{analyze_dips, initial_estimate, wrap_angle, DipReport, InitialEstimate};
use super::model::{internal_q, InternalQ};
use crate::error::{Error, Result};
use crate::lsq::{self, LmOptions};
use crate::types::{ComplexSweep, NotchFit, Warning};

/// Loaded Q above which a fit is treated as diverged.
pub const MAX_LOADED_Q: f64 = 1e9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Weighting {
    #[default]
    Uniform,
    /// Inverse of the per-point variance carried by the sweep.
    InverseVariance,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NotchOptions {
    pub weighting: Weighting,
    pub lm: Option<LmOptions>,
}

/// Fit a notch resonance with default options.
pub fn fit_notch(sweep: &ComplexSweep) -> Result<NotchFit> {
    fit_notch_with(sweep, &NotchOptions::default())
}

pub fn fit_notch_with(sweep: &ComplexSweep, opts: &NotchOptions) -> Result<NotchFit> {
    let dips = analyze_dips(sweep);
    if !dips.has_dip() {
        return Err(Error::NoResonance {
            depth: dips.depth,
            threshold: dips.threshold(),
        });
    }

    let mut warnings = Vec::new();
    let (sweep, dips) = if dips.regions.len() > 1 {
        log::warn!("{} dips in span; fitting the deepest", dips.regions.len());
        warnings.push(Warning::MultipleResonances {
            count: dips.regions.len(),
        });
        let cropped = crop_to_main_dip(sweep, &dips)?;
        let d = analyze_dips(&cropped);
        (cropped, d)
    } else {
        (sweep.clone(), dips)
    };

    let weights: Vec<f64> = match opts.weighting {
        Weighting::Uniform => vec![1.0; sweep.len()],
        Weighting::InverseVariance => sweep
            .point_variance()
            .ok_or_else(|| Error::invalid("inverse-variance weighting needs per-point variance"))?
            .iter()
            .map(|v| 1.0 / v.sqrt())
            .collect(),
    };

    let init = initial_estimate(&sweep, &dips)?;
    log::debug!("initial estimate: {init:?}");
    warnings.extend(init.warnings.iter().cloned());
    let lm_opts = opts.lm.unwrap_or_default();
    refine(&sweep, &init, &weights, &lm_opts, warnings)
}

fn crop_to_main_dip(sweep: &ComplexSweep, dips: &DipReport) -> Result<ComplexSweep> {
    let main = dips.main_region().unwrap_or(0);
    let start = if main > 0 {
        (dips.regions[main - 1].end + dips.regions[main].start) / 2
    } else {
        0
    };
    let end = if main + 1 < dips.regions.len() {
        (dips.regions[main].end + dips.regions[main + 1].start) / 2
    } else {
        sweep.len()
    };
    sweep.slice(start..end)
}

/// Parameter vector: [a, theta_rel, tau * span, Q_l, |Q_c|, phi, u] with
/// `f_r = f_r0 + u * f_r0 / Q_l0`.
struct Layout {
    f_ref: f64,
    span: f64,
    f_r0: f64,
    width: f64,
}

impl Layout {
    fn model(&self, p: &[f64], f: f64) -> Complex64 {
        let f_r = self.f_r0 + p[6] * self.width;
        let tau = p[2] / self.span;
        let bg = Complex64::from_polar(p[0], p[1] - 2.0 * PI * (f - self.f_ref) * tau);
        let x = (f - f_r) / f_r;
        let res = Complex64::new(1.0, 0.0)
            - (p[3] / p[4]) * Complex64::from_polar(1.0, p[5]) / Complex64::new(1.0, 2.0 * p[3] * x);
        bg * res
    }

    fn to_fit(&self, p: &[f64], residual_rms: f64, warnings: Vec<Warning>) -> NotchFit {
        let (mut a, mut theta_rel, mut q_c, mut phi) = (p[0], p[1], p[4], p[5]);
        if a < 0.0 {
            a = -a;
            theta_rel += PI;
        }
        if q_c < 0.0 {
            q_c = -q_c;
            phi += PI;
        }
        let tau = p[2] / self.span;
        let phi = wrap_angle(phi);
        let q_int = internal_q(p[3].abs(), q_c, phi)
            .ok()
            .and_then(InternalQ::value)
            .unwrap_or(f64::NAN);
        NotchFit {
            f_r: self.f_r0 + p[6] * self.width,
            q_l: p[3],
            q_c_mag: q_c,
            phi,
            q_int,
            background_amp: a,
            background_phase: wrap_angle(theta_rel + 2.0 * PI * self.f_ref * tau),
            cable_delay: tau,
            residual_rms,
            warnings,
        }
    }
}

fn refine(
    sweep: &ComplexSweep,
    init: &InitialEstimate,
    weights: &[f64],
    opts: &LmOptions,
    warnings: Vec<Warning>,
) -> Result<NotchFit> {
    let freqs = sweep.frequencies();
    let data = sweep.s21();
    let (lo, hi) = sweep.span();
    let layout = Layout {
        f_ref: init.f_ref,
        span: hi - lo,
        f_r0: init.f_r,
        width: init.f_r / init.q_l,
    };
    let x0 = [
        init.amplitude,
        init.phase_rel,
        init.cable_delay * layout.span,
        init.q_l,
        init.q_c_mag,
        init.phi,
        0.0,
    ];
    let typical = [init.amplitude, 1.0, 1.0, init.q_l, init.q_c_mag, 1.0, 1.0];

    let residuals = |p: &[f64]| {
        if p[3] <= 0.0 || p[4] == 0.0 {
            return None;
        }
        let mut out = Vec::with_capacity(2 * freqs.len());
        for ((&f, &z), &w) in freqs.iter().zip(data).zip(weights) {
            let d = (layout.model(p, f) - z) * w;
            out.push(d.re);
            out.push(d.im);
        }
        Some(out)
    };

    let rms = |p: &[f64]| {
        let ss: f64 = freqs
            .iter()
            .zip(data)
            .map(|(&f, &z)| (layout.model(p, f) - z).norm_sqr())
            .sum();
        (ss / freqs.len() as f64).sqrt()
    };

    let result = match lsq::minimize(residuals, &x0, &typical, opts) {
        Ok(r) => r,
        Err(fail) => {
            let best = if fail.trace.best_params.is_empty() {
                x0.to_vec()
            } else {
                fail.trace.best_params.clone()
            };
            return Err(Error::NotchNonConvergence {
                reason: fail.reason,
                best: Some(Box::new(layout.to_fit(&best, rms(&best), warnings))),
            });
        }
    };

    let p = &result.params;
    let fit = layout.to_fit(p, rms(p), warnings);
    let finite = [
        fit.f_r,
        fit.q_l,
        fit.q_c_mag,
        fit.phi,
        fit.background_amp,
        fit.cable_delay,
    ]
    .iter()
    .all(|v| v.is_finite());
    if !finite || fit.q_l > MAX_LOADED_Q || fit.q_l <= 0.0 {
        return Err(Error::NotchNonConvergence {
            reason: format!("diverged (Q_l = {:e})", fit.q_l),
            best: Some(Box::new(fit)),
        });
    }
    if fit.f_r < lo || fit.f_r > hi {
        return Err(Error::NotchNonConvergence {
            reason: format!("resonance {:.6e} Hz left the sweep span", fit.f_r),
            best: Some(Box::new(fit)),
        });
    }
    if fit.phi.abs() >= PI / 2.0 || !fit.q_int.is_finite() {
        return Err(Error::OutOfModel {
            best: Some(Box::new(fit)),
        });
    }
    Ok(fit)
}
