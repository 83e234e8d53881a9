//! Scaled conjugate gradient (Møller, 1993).
//!
//! Conjugate directions with a Levenberg-Marquardt style scalar `lambda`
//! regularizing the curvature estimate along each direction. Curvature comes
//! from a one-sided difference of gradients, so no second derivatives are
//! needed. A step is taken only when the comparison ratio `Delta` is
//! non-negative, which makes the error sequence non-increasing.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, dot};

/// A differentiable scalar function of a flat parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    fn gradient(&self, w: &[f64], grad: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScgOptions {
    pub max_iterations: usize,
    /// Stop once the gradient norm falls below this.
    pub gradient_tolerance: f64,
    /// Stop once the objective is at or below this value.
    #[serde(default)]
    pub error_goal: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScgReport {
    pub iterations: usize,
    pub initial_error: f64,
    pub final_error: f64,
    pub gradient_norm: f64,
    pub converged: bool,
}

const SIGMA: f64 = 1e-4;
const LAMBDA_INIT: f64 = 1e-6;
const LAMBDA_MAX: f64 = 1e100;

/// Minimizes `objective` in place starting from `w`.
pub fn minimize_scg<O: Objective + ?Sized>(
    objective: &O,
    w: &mut [f64],
    options: &ScgOptions,
) -> Result<ScgReport> {
    let n = objective.dim();
    assert_eq!(w.len(), n, "parameter vector length");

    let mut error = objective.value(w);
    if !error.is_finite() {
        return Err(Error::NonFiniteLoss { iteration: 0 });
    }
    let initial_error = error;

    let mut grad = vec![0.0; n];
    objective.gradient(w, &mut grad);
    let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut p = r.clone();
    let mut s = vec![0.0; n];
    let mut w_trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];

    let mut lambda = LAMBDA_INIT;
    let mut lambda_bar = 0.0;
    let mut delta = 0.0;
    let mut success = true;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        if options.error_goal.is_some_and(|goal| error <= goal) {
            break;
        }
        if math::sqrt(dot(&r, &r)) < options.gradient_tolerance {
            converged = true;
            break;
        }
        let p2 = dot(&p, &p);
        if p2 == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;

        if success {
            let sigma = SIGMA / math::sqrt(p2);
            for i in 0..n {
                w_trial[i] = w[i] + sigma * p[i];
            }
            objective.gradient(&w_trial, &mut g_trial);
            for i in 0..n {
                s[i] = (g_trial[i] - grad[i]) / sigma;
            }
            delta = dot(&p, &s);
        }

        // scale the curvature estimate
        let shift = lambda - lambda_bar;
        for i in 0..n {
            s[i] += shift * p[i];
        }
        delta += shift * p2;

        // force positive definiteness
        if delta <= 0.0 {
            let fix = lambda - 2.0 * delta / p2;
            for i in 0..n {
                s[i] += fix * p[i];
            }
            lambda_bar = 2.0 * (lambda - delta / p2);
            delta = -delta + lambda * p2;
            lambda = lambda_bar;
        }

        let mut mu = dot(&p, &r);
        if mu <= 0.0 {
            // not a descent direction: restart along the negative gradient
            p.copy_from_slice(&r);
            mu = dot(&r, &r);
            success = true;
            lambda_bar = 0.0;
            if mu == 0.0 {
                converged = true;
                break;
            }
            continue;
        }
        let alpha = mu / delta;

        for i in 0..n {
            w_trial[i] = w[i] + alpha * p[i];
        }
        let trial_error = objective.value(&w_trial);
        if !trial_error.is_finite() {
            return Err(Error::NonFiniteLoss {
                iteration: iterations,
            });
        }
        let comparison = 2.0 * delta * (error - trial_error) / (mu * mu);

        if comparison >= 0.0 {
            w.copy_from_slice(&w_trial);
            error = trial_error;
            let r_old = r.clone();
            objective.gradient(w, &mut grad);
            for i in 0..n {
                r[i] = -grad[i];
            }
            lambda_bar = 0.0;
            success = true;
            if iterations % n == 0 {
                p.copy_from_slice(&r);
            } else {
                let beta = (dot(&r, &r) - dot(&r, &r_old)) / mu;
                for i in 0..n {
                    p[i] = r[i] + beta * p[i];
                }
            }
            if comparison >= 0.75 {
                lambda *= 0.25;
            }
        } else {
            lambda_bar = lambda;
            success = false;
        }

        if comparison < 0.25 {
            lambda = (lambda + delta * (1.0 - comparison) / p2).min(LAMBDA_MAX);
        }
    }

    if !converged && math::sqrt(dot(&r, &r)) < options.gradient_tolerance {
        converged = true;
    }

    Ok(ScgReport {
        iterations,
        initial_error,
        final_error: error,
        gradient_norm: math::sqrt(dot(&r, &r)),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(w) = sum_i c_i (w_i - t_i)^2
    struct Quadratic {
        scale: Vec<f64>,
        target: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.scale.len()
        }
        fn value(&self, w: &[f64]) -> f64 {
            (0..w.len())
                .map(|i| self.scale[i] * (w[i] - self.target[i]).powi(2))
                .sum()
        }
        fn gradient(&self, w: &[f64], g: &mut [f64]) {
            for i in 0..w.len() {
                g[i] = 2.0 * self.scale[i] * (w[i] - self.target[i]);
            }
        }
    }

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, w: &[f64]) -> f64 {
            (1.0 - w[0]).powi(2) + 100.0 * (w[1] - w[0] * w[0]).powi(2)
        }
        fn gradient(&self, w: &[f64], g: &mut [f64]) {
            g[0] = -2.0 * (1.0 - w[0]) - 400.0 * w[0] * (w[1] - w[0] * w[0]);
            g[1] = 200.0 * (w[1] - w[0] * w[0]);
        }
    }

    #[test]
    fn solves_ill_conditioned_quadratic() {
        let q = Quadratic {
            scale: vec![1.0, 10.0, 100.0, 0.1],
            target: vec![1.0, -2.0, 0.5, 3.0],
        };
        let mut w = vec![0.0; 4];
        let opts = ScgOptions {
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            error_goal: None,
        };
        let report = minimize_scg(&q, &mut w, &opts).unwrap();
        assert!(report.converged, "{report:?}");
        for (a, b) in w.iter().zip(&q.target) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn descends_rosenbrock_monotonically() {
        let mut w = vec![-1.2, 1.0];
        let opts = ScgOptions {
            max_iterations: 2000,
            gradient_tolerance: 1e-8,
            error_goal: None,
        };
        let report = minimize_scg(&Rosenbrock, &mut w, &opts).unwrap();
        assert!(report.final_error <= report.initial_error);
        assert!(
            (w[0] - 1.0).abs() < 1e-4 && (w[1] - 1.0).abs() < 1e-4,
            "{w:?}"
        );
    }

    #[test]
    fn zero_iterations_leaves_weights() {
        let mut w = vec![-1.2, 1.0];
        let opts = ScgOptions {
            max_iterations: 0,
            gradient_tolerance: 1e-8,
            error_goal: None,
        };
        let report = minimize_scg(&Rosenbrock, &mut w, &opts).unwrap();
        assert_eq!(w, vec![-1.2, 1.0]);
        assert_eq!(report.final_error, report.initial_error);
    }

    struct Explodes;

    impl Objective for Explodes {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, w: &[f64]) -> f64 {
            if w[0] > 0.5 {
                f64::NAN
            } else {
                -w[0]
            }
        }
        fn gradient(&self, _: &[f64], g: &mut [f64]) {
            g[0] = -1.0;
        }
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let mut w = vec![0.0];
        let opts = ScgOptions {
            max_iterations: 50,
            gradient_tolerance: 1e-12,
            error_goal: None,
        };
        assert!(matches!(
            minimize_scg(&Explodes, &mut w, &opts),
            Err(Error::NonFiniteLoss { .. })
        ));
    }
}
