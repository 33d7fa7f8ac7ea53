#![allow(dead_code)]

use num_complex::Complex64;
use resokit::notch::{fit_circle, fit_notch, NotchModel};
use resokit::synth::{linewidth_grid, synth_notch, GaussianSource, NoiseSpec};
use resokit::NotchFit;

pub const GRID_FREQUENCIES: [f64; 4] = [4e9, 5e9, 8e9, 10e9];
pub const GRID_LOADED_Q: [f64; 3] = [500.0, 2000.0, 1e4];
pub const GRID_COUPLING_RATIO: [f64; 3] = [0.1, 0.5, 0.9];
pub const GRID_PHI: [f64; 3] = [-0.3, 0.0, 0.3];

pub fn with_background(f_r: f64, q_l: f64, q_c_mag: f64, phi: f64) -> NotchModel {
    NotchModel {
        amplitude: 0.9,
        phase: 0.4,
        cable_delay: 30e-9,
        ..NotchModel::bare(f_r, q_l, q_c_mag, phi)
    }
}

pub fn grid_models() -> Vec<NotchModel> {
    let mut out = Vec::new();
    for &f_r in &GRID_FREQUENCIES {
        for &q_l in &GRID_LOADED_Q {
            for &ratio in &GRID_COUPLING_RATIO {
                for &phi in &GRID_PHI {
                    out.push(with_background(f_r, q_l, q_l / ratio, phi));
                }
            }
        }
    }
    out
}

/// Worst relative error over `f_r`, `Q_l`, `|Q_c|` and `Q_int`, with `phi`
/// compared in absolute terms.
pub fn worst_error(m: &NotchModel, fit: &NotchFit) -> f64 {
    let q_int = 1.0 / (1.0 / m.q_l - m.phi.cos() / m.q_c_mag);
    [
        (fit.f_r - m.f_r).abs() / m.f_r,
        (fit.q_l - m.q_l).abs() / m.q_l,
        (fit.q_c_mag - m.q_c_mag).abs() / m.q_c_mag,
        (fit.q_int - q_int).abs() / q_int,
        (fit.phi - m.phi).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn noiseless_round_trip(m: &NotchModel) -> f64 {
    let grid = linewidth_grid(m.f_r, m.q_l, 8.0, 401);
    let sweep = synth_notch(m, &grid, NoiseSpec::none()).unwrap();
    let fit = fit_notch(&sweep).unwrap_or_else(|e| panic!("{m:?}: {e}"));
    worst_error(m, &fit)
}

/// Relative error of the recovered `Q_int = 3000` at `|Q_c| = 6000`.
pub fn noisy_q_int_error(sigma: f64, seed: u64) -> f64 {
    let m = with_background(5e9, 2000.0, 6000.0, 0.0);
    let grid = linewidth_grid(m.f_r, m.q_l, 8.0, 401);
    let sweep = synth_notch(&m, &grid, NoiseSpec::new(sigma, seed).unwrap()).unwrap();
    let fit = fit_notch(&sweep).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    (fit.q_int - 3000.0).abs() / 3000.0
}

/// Largest absolute error in center and radius for 64 noisy points on the
/// circle centered at (0.3, -0.2) with radius 0.45.
pub fn noisy_circle_error(sigma: f64, seed: u64) -> f64 {
    let mut g = GaussianSource::new(seed);
    let pts: Vec<Complex64> = (0..64)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            Complex64::new(
                0.3 + 0.45 * t.cos() + g.next_normal(sigma),
                -0.2 + 0.45 * t.sin() + g.next_normal(sigma),
            )
        })
        .collect();
    let c = fit_circle(&pts).unwrap();
    (c.xc - 0.3).abs().max((c.yc + 0.2).abs()).max((c.r - 0.45).abs())
}
