use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub xc: f64,
    pub yc: f64,
    pub r: f64,
}

impl Circle {
    pub fn center(&self) -> Complex64 {
        Complex64::new(self.xc, self.yc)
    }

    /// RMS of geometric distances to the circle.
    pub fn rms(&self, points: &[Complex64]) -> f64 {
        let c = self.center();
        let ss: f64 = points
            .iter()
            .map(|p| {
                let d = (p - c).norm() - self.r;
                d * d
            })
            .sum();
        (ss / points.len() as f64).sqrt()
    }

    /// RMS of geometric distances to the circle, in units of the radius.
    pub fn relative_rms(&self, points: &[Complex64]) -> f64 {
        self.rms(points) / self.r
    }
}

/// Taubin algebraic circle fit, solved with Newton iterations on the
/// characteristic polynomial (Chernov's formulation). Exact for points that
/// lie on a circle.
pub fn fit_circle(points: &[Complex64]) -> Result<Circle> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "circle fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::NonFinite {
            what: "circle-fit points",
        });
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Complex64>() / n;

    let (mut mxx, mut myy, mut mxy, mut mxz, mut myz, mut mzz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let xi = p.re - mean.re;
        let yi = p.im - mean.im;
        let zi = xi * xi + yi * yi;
        mxy += xi * yi;
        mxx += xi * xi;
        myy += yi * yi;
        mxz += xi * zi;
        myz += yi * zi;
        mzz += zi * zi;
    }
    mxx /= n;
    myy /= n;
    mxy /= n;
    mxz /= n;
    myz /= n;
    mzz /= n;

    let mz = mxx + myy;
    let cov_xy = mxx * myy - mxy * mxy;
    if mz == 0.0 || cov_xy <= 1e-14 * mz * mz {
        return Err(Error::DegenerateGeometry("points are collinear or coincident".into()));
    }
    let var_z = mzz - mz * mz;
    let a3 = 4.0 * mz;
    let a2 = -3.0 * mz * mz - mzz;
    let a1 = var_z * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz;
    let a0 = mxz * (mxz * myy - myz * mxy) + myz * (myz * mxx - mxz * mxy) - var_z * cov_xy;
    let a22 = a2 + a2;
    let a33 = a3 + a3 + a3;

    let mut x = 0.0f64;
    let mut y = a0;
    for _ in 0..99 {
        let dy = a1 + x * (a22 + a33 * x);
        let x_new = x - y / dy;
        if x_new == x || !x_new.is_finite() {
            break;
        }
        let y_new = a0 + x_new * (a1 + x_new * (a2 + x_new * a3));
        if y_new.abs() >= y.abs() {
            break;
        }
        x = x_new;
        y = y_new;
    }

    let det = x * x - x * mz + cov_xy;
    let xc = (mxz * (myy - x) - myz * mxy) / det / 2.0;
    let yc = (myz * (mxx - x) - mxz * mxy) / det / 2.0;
    let r = (xc * xc + yc * yc + mz).sqrt();
    let circle = Circle {
        xc: xc + mean.re,
        yc: yc + mean.im,
        r,
    };
    if !(circle.xc.is_finite() && circle.yc.is_finite() && r.is_finite() && r > 0.0) {
        return Err(Error::DegenerateGeometry(
            "circle fit produced a non-finite circle".into(),
        ));
    }
    Ok(circle)
}
