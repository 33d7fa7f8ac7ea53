//! Dip detection, cable-delay estimation and the geometric initial estimate
//! that seeds the final notch refinement.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::circle::fit_circle;
use crate::error::{Error, Result};
use crate::lsq::{self, LmOptions};
use crate::types::{ComplexSweep, Warning};

/// Off-resonant transmission level and electrical delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub amplitude: f64,
    /// Phase of `a e^{i theta}` at zero frequency, wrapped to (-pi, pi].
    pub phase: f64,
    pub cable_delay: f64,
    pub warnings: Vec<Warning>,
}

impl Background {
    pub fn at(&self, f: f64) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase - 2.0 * PI * f * self.cable_delay)
    }

    /// Divide the background out of a sweep.
    pub fn normalize(&self, sweep: &ComplexSweep) -> Vec<Complex64> {
        sweep
            .frequencies()
            .iter()
            .zip(sweep.s21())
            .map(|(&f, &z)| z / self.at(f))
            .collect()
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

pub(crate) fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in phases {
        if let Some(q) = prev {
            let d = p - q;
            if d > PI {
                offset -= 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
            } else if d < -PI {
                offset += 2.0 * PI * ((-d + PI) / (2.0 * PI)).floor();
            }
        }
        out.push(p + offset);
        prev = Some(p);
    }
    out
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Magnitude-dip analysis of a sweep.
#[derive(Debug, Clone)]
pub(crate) struct DipReport {
    pub min_index: usize,
    pub baseline: f64,
    pub depth: f64,
    pub noise: f64,
    /// Contiguous index ranges that dip clearly below the baseline, sorted.
    pub regions: Vec<Range<usize>>,
}

impl DipReport {
    pub fn threshold(&self) -> f64 {
        (3.0 * self.noise).max(1e-9 * self.baseline)
    }

    pub fn has_dip(&self) -> bool {
        self.depth > self.threshold()
    }

    pub fn main_region(&self) -> Option<usize> {
        self.regions.iter().position(|r| r.contains(&self.min_index))
    }

    /// Half-depth width of the main dip, in Hz.
    pub fn half_width(&self, freqs: &[f64], mags: &[f64]) -> f64 {
        let level = self.baseline - 0.5 * self.depth;
        let mut lo = self.min_index;
        while lo > 0 && mags[lo - 1] < level {
            lo -= 1;
        }
        let mut hi = self.min_index;
        while hi + 1 < mags.len() && mags[hi + 1] < level {
            hi += 1;
        }
        let spacing = (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64;
        (freqs[hi] - freqs[lo]).max(spacing)
    }
}

pub(crate) fn analyze_dips(sweep: &ComplexSweep) -> DipReport {
    let mags: Vec<f64> = sweep.s21().iter().map(|z| z.norm()).collect();
    let n = mags.len();
    let edge = (n / 5).max(1);
    let mut edges: Vec<f64> = mags[..edge].iter().chain(&mags[n - edge..]).copied().collect();
    let baseline = median(&mut edges);

    let mut d2: Vec<f64> = mags.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    let m = median(&mut d2.clone());
    let mut dev: Vec<f64> = d2.iter_mut().map(|v| (*v - m).abs()).collect();
    let noise = 1.4826 * median(&mut dev) / 6f64.sqrt();

    let (min_index, min_mag) = mags
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("sweep is never empty");
    let depth = baseline - min_mag;

    let level = baseline - (3.0 * noise).max(0.25 * depth);
    let mut regions: Vec<Range<usize>> = Vec::new();
    let mut start = None;
    for (i, &v) in mags.iter().enumerate() {
        match (v < level, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                regions.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        regions.push(s..n);
    }
    // merge fragments split by a couple of noisy samples
    let mut merged: Vec<Range<usize>> = Vec::new();
    for r in regions {
        match merged.last_mut() {
            Some(last) if r.start <= last.end + 2 => last.end = r.end,
            _ => merged.push(r),
        }
    }

    DipReport {
        min_index,
        baseline,
        depth,
        noise,
        regions: merged,
    }
}

/// Delay from a linear fit of unwrapped phase against frequency over the
/// selected points.
fn regress_delay(freqs: &[f64], phases: &[f64], select: impl Fn(usize) -> bool) -> Option<f64> {
    let idx: Vec<usize> = (0..freqs.len()).filter(|&i| select(i)).collect();
    if idx.len() < 2 {
        return None;
    }
    let n = idx.len() as f64;
    let fm = idx.iter().map(|&i| freqs[i]).sum::<f64>() / n;
    let pm = idx.iter().map(|&i| phases[i]).sum::<f64>() / n;
    let (mut sfp, mut sff) = (0.0, 0.0);
    for &i in &idx {
        let df = freqs[i] - fm;
        sfp += df * (phases[i] - pm);
        sff += df * df;
    }
    if sff == 0.0 {
        return None;
    }
    Some(-(sfp / sff) / (2.0 * PI))
}

/// Remove a trial delay, measuring frequency from `f_ref`.
pub(crate) fn remove_delay(freqs: &[f64], s21: &[Complex64], f_ref: f64, tau: f64) -> Vec<Complex64> {
    freqs
        .iter()
        .zip(s21)
        .map(|(&f, &z)| z * Complex64::from_polar(1.0, 2.0 * PI * (f - f_ref) * tau))
        .collect()
}

fn circle_misfit(freqs: &[f64], s21: &[Complex64], f_ref: f64, tau: f64) -> f64 {
    let pts = remove_delay(freqs, s21, f_ref, tau);
    match fit_circle(&pts) {
        // absolute misfit: a relative one rewards the large circles that
        // approximate a delay spiral
        Ok(c) => c.rms(&pts),
        Err(_) => f64::MAX,
    }
}

/// Golden-section search for the delay that makes the corrected points most
/// circular.
fn refine_delay(freqs: &[f64], s21: &[Complex64], f_ref: f64, tau0: f64, half_width: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (tau0 - half_width, tau0 + half_width);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = circle_misfit(freqs, s21, f_ref, c);
    let mut fd = circle_misfit(freqs, s21, f_ref, d);
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = circle_misfit(freqs, s21, f_ref, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = circle_misfit(freqs, s21, f_ref, d);
        }
        if (b - a).abs() <= 1e-15 * tau0.abs().max(1e-3 / (freqs[freqs.len() - 1] - freqs[0])) {
            break;
        }
    }
    let mid = 0.5 * (a + b);
    let candidates = [
        (tau0, circle_misfit(freqs, s21, f_ref, tau0)),
        (mid, circle_misfit(freqs, s21, f_ref, mid)),
    ];
    if candidates[1].1 <= candidates[0].1 {
        candidates[1].0
    } else {
        candidates[0].0
    }
}

/// Geometric estimate of all notch parameters. Frequencies inside are
/// measured from `f_ref`; `phase_rel` is the background phase at `f_ref`.
#[derive(Debug, Clone)]
pub(crate) struct InitialEstimate {
    pub f_ref: f64,
    pub amplitude: f64,
    pub phase_rel: f64,
    pub cable_delay: f64,
    pub q_l: f64,
    pub q_c_mag: f64,
    pub phi: f64,
    pub f_r: f64,
    pub warnings: Vec<Warning>,
}

impl InitialEstimate {
    pub fn absolute_phase(&self) -> f64 {
        wrap_angle(self.phase_rel + 2.0 * PI * self.f_ref * self.cable_delay)
    }
}

pub(crate) fn reference_frequency(sweep: &ComplexSweep) -> f64 {
    let (lo, hi) = sweep.span();
    0.5 * (lo + hi)
}

/// Cable delay with the margin check. Returns the delay and any warning.
fn initial_delay(sweep: &ComplexSweep, dips: &DipReport) -> (f64, Option<Warning>) {
    let freqs = sweep.frequencies();
    let phases = unwrap(&sweep.s21().iter().map(|z| z.arg()).collect::<Vec<_>>());
    let global = || regress_delay(freqs, &phases, |_| true).unwrap_or(0.0);
    if !dips.has_dip() {
        return (global(), None);
    }
    let mags: Vec<f64> = sweep.s21().iter().map(|z| z.norm()).collect();
    let f_r0 = freqs[dips.min_index];
    let guard = 3.0 * dips.half_width(freqs, &mags);
    let left = freqs.iter().filter(|&&f| f < f_r0 - guard).count();
    let right = freqs.iter().filter(|&&f| f > f_r0 + guard).count();
    if left < 3 || right < 3 {
        log::warn!("sweep lacks off-resonant margin; using global phase-slope delay");
        return (global(), Some(Warning::NoOffResonantMargin));
    }
    let tau = regress_delay(freqs, &phases, |i| (freqs[i] - f_r0).abs() > guard).unwrap_or_else(global);
    (tau, None)
}

/// `theta(f) = theta0 + 2 atan(2 Q_l (1 - f/f_r))` fitted to the angles of
/// the corrected points around the circle center.
fn fit_phase_response(freqs: &[f64], angles: &[f64], f_r0: f64, q0: f64, theta0: f64) -> Result<(f64, f64, f64)> {
    let width = f_r0 / q0;
    let residuals = |p: &[f64]| {
        let (theta, q, u) = (p[0], p[1], p[2]);
        if q <= 0.0 {
            return None;
        }
        let f_r = f_r0 + u * width;
        Some(
            freqs
                .iter()
                .zip(angles)
                .map(|(&f, &a)| wrap_angle(a - theta - 2.0 * (2.0 * q * (f_r - f) / f_r).atan()))
                .collect(),
        )
    };
    let opts = LmOptions::default();
    let res = lsq::minimize(residuals, &[theta0, q0, 0.0], &[1.0, q0, 1.0], &opts).map_err(|e| {
        Error::NotchNonConvergence {
            reason: format!("phase-response fit: {}", e.reason),
            best: None,
        }
    })?;
    Ok((res.params[0], res.params[1], f_r0 + res.params[2] * width))
}

pub(crate) fn initial_estimate(sweep: &ComplexSweep, dips: &DipReport) -> Result<InitialEstimate> {
    let freqs = sweep.frequencies();
    let s21 = sweep.s21();
    let f_ref = reference_frequency(sweep);
    let span = freqs[freqs.len() - 1] - freqs[0];
    let mut warnings = Vec::new();

    let (tau0, warn) = initial_delay(sweep, dips);
    warnings.extend(warn);
    let tau = refine_delay(freqs, s21, f_ref, tau0, 0.25 / span + 0.05 * tau0.abs());

    let corrected = remove_delay(freqs, s21, f_ref, tau);
    let circle = fit_circle(&corrected)?;
    let center = circle.center();

    let angles: Vec<f64> = corrected.iter().map(|z| (z - center).arg()).collect();
    let unwrapped = unwrap(&angles);
    let i0 = dips.min_index;
    let f_r0 = freqs[i0];
    let a_r = unwrapped[i0];
    let lo = (0..i0).rev().find(|&i| unwrapped[i] - a_r >= PI / 2.0);
    let hi = (i0 + 1..freqs.len()).find(|&i| a_r - unwrapped[i] >= PI / 2.0);
    let q0 = match (lo, hi) {
        (Some(l), Some(h)) if freqs[h] > freqs[l] => f_r0 / (freqs[h] - freqs[l]),
        _ => {
            let mags: Vec<f64> = s21.iter().map(|z| z.norm()).collect();
            f_r0 / dips.half_width(freqs, &mags)
        }
    };

    let (theta0, q_l, f_r) = fit_phase_response(freqs, &angles, f_r0, q0, a_r)?;

    let off = center + circle.r * Complex64::from_polar(1.0, theta0 + PI);
    let amplitude = off.norm();
    let phase_rel = off.arg();
    let c_norm = center / off;
    let diameter = 2.0 * circle.r / amplitude;
    let phi = (Complex64::new(1.0, 0.0) - c_norm).arg();

    Ok(InitialEstimate {
        f_ref,
        amplitude,
        phase_rel,
        cable_delay: tau,
        q_l,
        q_c_mag: q_l / diameter,
        phi,
        f_r,

        warnings,
    })
}

/// Estimate amplitude, phase and cable delay of the off-resonant background.
///
/// With a resonance present the values come from the full notch fit, or
/// from the off-resonant point of the fitted circle if that fit fails.
/// Without a resonance they are the mean of the delay-corrected sweep.
pub fn estimate_background(sweep: &ComplexSweep) -> Result<Background> {
    let dips = analyze_dips(sweep);
    if dips.has_dip() {
        if let Ok(fit) = super::fit::fit_notch(sweep) {
            return Ok(Background {
                amplitude: fit.background_amp,
                phase: fit.background_phase,
                cable_delay: fit.cable_delay,
                warnings: fit.warnings,
            });
        }
        let est = initial_estimate(sweep, &dips)?;
        return Ok(Background {
            amplitude: est.amplitude,
            phase: est.absolute_phase(),
            cable_delay: est.cable_delay,
            warnings: est.warnings,
        });
    }
    let (tau, _) = initial_delay(sweep, &dips);
    let f_ref = reference_frequency(sweep);
    let corrected = remove_delay(sweep.frequencies(), sweep.s21(), f_ref, tau);
    let mean = corrected.iter().sum::<Complex64>() / corrected.len() as f64;
    Ok(Background {
        amplitude: mean.norm(),
        phase: wrap_angle(mean.arg() + 2.0 * PI * f_ref * tau),
        cable_delay: tau,
        warnings: Vec::new(),
    })
}
