//! Complex digamma function.
//!
//! Left of `Re(z) = 1/2` the reflection formula maps the argument to the
//! right half-plane. There the upward recurrence `psi(z) = psi(z + 1) - 1/z`
//! moves the argument to `|z| >= 20`, where the Stirling-type asymptotic
//! series with eight Bernoulli terms is accurate to well below one ulp.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ASYMPTOTIC_RADIUS: f64 = 20.0;

// B_{2k} / (2k), k = 1..=8
const BERNOULLI_TERMS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

pub fn complex_digamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite {
            what: "digamma argument",
        });
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Err(Error::DigammaPole { re: z.re, im: z.im });
    }
    if z.re < 0.5 {
        let one_minus = Complex64::new(1.0 - z.re, -z.im);
        return Ok(digamma_right_half(one_minus) - PI * cot_pi(z));
    }
    Ok(digamma_right_half(z))
}

/// Real digamma; convenience wrapper for real arguments.
pub fn digamma(x: f64) -> Result<f64> {
    complex_digamma(Complex64::new(x, 0.0)).map(|c| c.re)
}

fn digamma_right_half(mut z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while z.norm_sqr() < ASYMPTOTIC_RADIUS * ASYMPTOTIC_RADIUS {
        acc -= z.inv();
        z.re += 1.0;
    }
    let w = z.inv();
    let w2 = w * w;
    let mut series = Complex64::new(0.0, 0.0);
    for c in BERNOULLI_TERMS.iter().rev() {
        series = (series + c) * w2;
    }
    acc + z.ln() - 0.5 * w - series
}

/// `cot(pi z)` evaluated through `exp(2 pi i z)` in the half-plane where it
/// decays, so large imaginary parts neither overflow nor lose precision.
fn cot_pi(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return cot_pi(z.conj()).conj();
    }
    let i = Complex64::new(0.0, 1.0);
    // Reduce the real part so exp() sees a bounded phase.
    let re = z.re - z.re.round();
    let w = (2.0 * PI * i * Complex64::new(re, z.im)).exp();
    i * (w + 1.0) / (w - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn special_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-15);
        let half = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
        assert!((digamma(0.5).unwrap() - half).abs() < 1e-15);
        assert!((digamma(0.5).unwrap() + 1.963_510_026_0).abs() < 1e-10);
        // psi(1/4) = -gamma - pi/2 - 3 ln 2 exercises the reflection branch
        let quarter = -EULER_GAMMA - PI / 2.0 - 3.0 * std::f64::consts::LN_2;
        assert!((digamma(0.25).unwrap() - quarter).abs() < 1e-14);
    }

    #[test]
    fn imaginary_part_on_half_line() {
        // Im psi(1/2 + iy) = (pi/2) tanh(pi y)
        for &y in &[0.1, 1.0, 3.7, 25.0, 400.0] {
            let v = complex_digamma(Complex64::new(0.5, y)).unwrap();
            let expected = PI / 2.0 * (PI * y).tanh();
            assert!((v.im - expected).abs() < 1e-14 * expected.max(1.0), "y = {y}");
        }
    }

    #[test]
    fn poles_are_rejected() {
        for x in [0.0, -1.0, -2.0, -17.0] {
            assert!(matches!(
                complex_digamma(Complex64::new(x, 0.0)),
                Err(Error::DigammaPole { .. })
            ));
        }
        assert!(complex_digamma(Complex64::new(-1.0, 1e-3)).is_ok());
        assert!(complex_digamma(Complex64::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn recurrence_on_grid() {
        // 1000 points, Re in [0.1, 10], Im in [-100, 100]
        for i in 0..40 {
            for k in 0..25 {
                let z = Complex64::new(0.1 + 9.9 * i as f64 / 39.0, -100.0 + 200.0 * k as f64 / 24.0);
                let lhs = complex_digamma(z + 1.0).unwrap() - complex_digamma(z).unwrap();
                assert!((lhs - z.inv()).norm() < 1e-13, "z = {z}");
            }
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let z = Complex64::new(2.3, 4.1);
        let a = complex_digamma(z.conj()).unwrap();
        let b = complex_digamma(z).unwrap().conj();
        assert!(rel(a, b) < 1e-15);
    }

    #[test]
    fn large_arguments() {
        let z = Complex64::new(3.0e5, -8.0e5);
        let v = complex_digamma(z).unwrap();
        let approx = z.ln() - 0.5 / z;
        assert!(rel(v, approx) < 1e-12);
    }

    #[test]
    fn reflection_with_large_imaginary_part() {
        let z = Complex64::new(-3.3, 250.0);
        let v = complex_digamma(z).unwrap();
        assert!(v.re.is_finite() && v.im.is_finite());
        let lhs = complex_digamma(Complex64::new(1.0, 0.0) - z).unwrap() - v;
        assert!(rel(lhs, PI * cot_pi(z)) < 1e-12);
    }
}
