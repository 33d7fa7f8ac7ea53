//! Damped Gauss-Newton (Levenberg-Marquardt) least squares with
//! central-difference Jacobians.
//!
//! The residual function returns `None` when the parameters fall outside its
//! domain; such trial steps are rejected like any step that increases the
//! cost, so the accepted cost sequence never increases.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged when every `|step_j| <= x_tol * (|x_j| + typical_j)`.
    pub x_tol: f64,
    /// Converged when the relative cost decrease of an accepted step is below this.
    pub f_tol: f64,
    /// Central-difference step relative to `max(|x_j|, typical_j)`.
    pub fd_rel_step: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            x_tol: 1e-10,
            f_tol: 1e-12,
            fd_rel_step: 1e-6,
            initial_lambda: 1e-3,
        }
    }
}

/// Cost after every accepted iteration, starting with the initial cost.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LmTrace {
    pub costs: Vec<f64>,
    pub best_params: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ParameterStep,
    CostChange,
    ZeroResidual,
    /// Damping grew until no step could reduce the cost.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Half the sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: LmTrace,
    /// `(J^T J)^-1`; `None` when singular.
    pub inverse_hessian: Option<DMatrix<f64>>,
}

impl LmResult {
    /// One-sigma parameter uncertainties scaled by the reduced chi-square.
    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        let inv = self.inverse_hessian.as_ref()?;
        let m = self.residuals.len();
        let n = self.params.len();
        if m <= n {
            return None;
        }
        let s2 = 2.0 * self.cost / (m - n) as f64;
        Some((0..n).map(|j| (inv[(j, j)].max(0.0) * s2).sqrt()).collect())
    }
}

#[derive(Debug, Clone)]
pub struct LmFailure {
    pub reason: String,
    pub trace: LmTrace,
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn evaluate<F>(f: &F, x: &[f64]) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    f(x).filter(|r| r.iter().all(|v| v.is_finite()))
}

/// Central-difference Jacobian (rows: residuals, columns: parameters).
/// Returns `None` only if both neighbours of some parameter are outside
/// the residual domain.
pub fn jacobian_fd<F>(f: &F, x: &[f64], typical: &[f64], rel_step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = x.len();
    let mut xp = x.to_vec();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let h = rel_step * x[j].abs().max(typical[j]);
        xp[j] = x[j] + h;
        let up = evaluate(f, &xp);
        xp[j] = x[j] - h;
        let down = evaluate(f, &xp);
        xp[j] = x[j];
        // Near a domain edge fall back to a one-sided difference.
        let (hi, lo, span) = match (up, down) {
            (Some(u), Some(d)) => (u, d, 2.0 * h),
            (Some(u), None) => (u, evaluate(f, x)?, h),
            (None, Some(d)) => (evaluate(f, x)?, d, h),
            (None, None) => return None,
        };
        columns.push(hi.iter().zip(&lo).map(|(a, b)| (a - b) / span).collect::<Vec<_>>());
    }
    let m = columns.first().map_or(0, Vec::len);
    Some(DMatrix::from_fn(m, n, |i, j| columns[j][i]))
}

/// Minimize `0.5 * |f(x)|^2` starting at `x0`.
///
/// `typical` gives a characteristic magnitude per parameter, used when the
/// parameter itself is near zero (finite-difference step and step test).
pub fn minimize<F>(f: F, x0: &[f64], typical: &[f64], opts: &LmOptions) -> Result<LmResult, LmFailure>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    assert_eq!(x0.len(), typical.len());
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut trace = LmTrace::default();
    let Some(mut r) = evaluate(&f, &x) else {
        return Err(LmFailure {
            reason: "residuals are not finite at the starting point".into(),
            trace,
        });
    };
    let mut cost = cost_of(&r);
    trace.costs.push(cost);
    trace.best_params = x.clone();

    let mut lambda = opts.initial_lambda;
    let mut termination = None;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            termination = Some(Termination::ZeroResidual);
            break;
        }
        let Some(jac) = jacobian_fd(&f, &x, typical, opts.fd_rel_step) else {
            return Err(LmFailure {
                reason: "Jacobian evaluation left the residual domain".into(),
                trace,
            });
        };
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * rv;
        let diag: Vec<f64> = (0..n)
            .map(|j| {
                let d = jtj[(j, j)];
                if d > 0.0 {
                    d
                } else {
                    1e-300
                }
            })
            .collect();

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for (j, d) in diag.iter().enumerate() {
                a[(j, j)] += lambda * d;
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => match a.lu().solve(&(-&grad)) {
                    Some(s) => s,
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                },
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            match evaluate(&f, &trial) {
                Some(rt) => {
                    let ct = cost_of(&rt);
                    if ct <= cost {
                        let small_step = step
                            .iter()
                            .enumerate()
                            .all(|(j, s)| s.abs() <= opts.x_tol * (x[j].abs() + typical[j]));
                        let small_change = cost > 0.0 && (cost - ct) / cost < opts.f_tol;
                        x = trial;
                        r = rt;
                        cost = ct;
                        trace.costs.push(cost);
                        trace.best_params = x.clone();
                        lambda = (lambda / 3.0).max(1e-12);
                        accepted = true;
                        if small_step {
                            termination = Some(Termination::ParameterStep);
                        } else if small_change {
                            termination = Some(Termination::CostChange);
                        }
                        break;
                    }
                    lambda *= 10.0;
                }
                None => lambda *= 10.0,
            }
        }
        if !accepted {
            termination = Some(Termination::Stalled);
        }
        if termination.is_some() {
            break;
        }
    }

    let Some(termination) = termination else {
        return Err(LmFailure {
            reason: format!("no convergence after {} iterations", opts.max_iterations),
            trace,
        });
    };

    let inverse_hessian =
        jacobian_fd(&f, &x, typical, opts.fd_rel_step).and_then(|j| (j.transpose() * &j).try_inverse());

    Ok(LmResult {
        params: x,
        residuals: r,
        cost,
        iterations,
        termination,
        trace,
        inverse_hessian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_decay() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-1.3 * t).exp() + 0.2).collect();
        let f = |p: &[f64]| {
            Some(
                t.iter()
                    .zip(&y)
                    .map(|(t, y)| p[0] * (-p[1] * t).exp() + p[2] - y)
                    .collect(),
            )
        };
        let res = minimize(f, &[1.0, 0.5, 0.0], &[1.0, 1.0, 1.0], &LmOptions::default()).unwrap();
        assert!((res.params[0] - 2.5).abs() < 1e-8);
        assert!((res.params[1] - 1.3).abs() < 1e-8);
        assert!((res.params[2] - 0.2).abs() < 1e-8);
    }

    #[test]
    fn accepted_costs_never_increase() {
        // Rosenbrock as a residual problem.
        let f = |p: &[f64]| Some(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]);
        let res = minimize(f, &[-1.2, 1.0], &[1.0, 1.0], &LmOptions::default()).unwrap();
        assert!(res.trace.costs.windows(2).all(|w| w[1] <= w[0]));
        assert!((res.params[0] - 1.0).abs() < 1e-6);
        assert!((res.params[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn domain_violations_are_rejected() {
        // sqrt(p) model; steps into p < 0 must be refused.
        let f = |p: &[f64]| {
            if p[0] < 0.0 {
                None
            } else {
                Some(vec![p[0].sqrt() - 0.1, 0.0])
            }
        };
        let res = minimize(f, &[4.0], &[1.0], &LmOptions::default()).unwrap();
        assert!((res.params[0] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn reports_failure_at_bad_start() {
        let f = |_: &[f64]| Some(vec![f64::NAN]);
        let err = minimize(f, &[0.0], &[1.0], &LmOptions::default()).unwrap_err();
        assert!(err.reason.contains("starting point"));
    }

    #[test]
    fn iteration_cap_yields_trace() {
        let f = |p: &[f64]| Some(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]);
        let opts = LmOptions {
            max_iterations: 2,
            ..Default::default()
        };
        let err = minimize(f, &[-1.2, 1.0], &[1.0, 1.0], &opts).unwrap_err();
        assert_eq!(err.trace.costs.len(), 3);
    }

    #[test]
    fn fd_jacobian_matches_coarser_step() {
        let f = |p: &[f64]| Some(vec![p[0].sin() * p[1], p[0] * p[1].exp()]);
        let x = [0.7, -0.3];
        let fine = jacobian_fd(&f, &x, &[1.0, 1.0], 1e-6).unwrap();
        let coarse = jacobian_fd(&f, &x, &[1.0, 1.0], 1e-4).unwrap();
        for (a, b) in fine.iter().zip(coarse.iter()) {
            assert!((a - b).abs() < 1e-7);
        }
    }
}
