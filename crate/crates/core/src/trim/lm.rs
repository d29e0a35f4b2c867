//! Bounded Levenberg–Marquardt for square (or overdetermined) systems with a
//! forward-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TrimError};

/// A residual function the solver can drive.
///
/// `accept` is called once after each accepted step, right after the `eval`
/// that produced it. Implementations use it to promote warm-start state; the
/// Jacobian probes in between never call it.
pub trait Residual {
    fn eval(&mut self, x: &[f64]) -> Result<Vec<f64>>;
    fn accept(&mut self) {}
}

impl<F> Residual for F
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    fn eval(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    /// Converged when the residual 2-norm drops below this.
    pub tolerance: f64,
    /// Stop when an accepted step is shorter than this.
    pub step_tolerance: f64,
    pub max_iterations: usize,
    /// Finite-difference step as a fraction of each variable's range.
    pub fd_fraction: f64,
    pub initial_damping: f64,
    /// Give up when the cost has not fallen by 1% over this many iterations.
    pub stall_window: usize,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            step_tolerance: 1e-10,
            max_iterations: 200,
            fd_fraction: 1e-4,
            initial_damping: 1e-3,
            stall_window: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

fn norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn jacobian<R: Residual>(
    f: &mut R,
    x: &[f64],
    r0: &[f64],
    bounds: &[(f64, f64)],
    fraction: f64,
) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(r0.len(), x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let (lo, hi) = bounds[j];
        let mut h = fraction * (hi - lo);
        if x[j] + h > hi {
            h = -h;
        }
        probe[j] = x[j] + h;
        let r = f.eval(&probe)?;
        probe[j] = x[j];
        for i in 0..r0.len() {
            jac[(i, j)] = (r[i] - r0[i]) / h;
        }
    }
    Ok(jac)
}

/// Minimise `‖f(x)‖` over the box `bounds` starting from `x0`.
///
/// Returns the outcome even when not converged; the caller decides whether
/// that is an error. Model failures at trial points count as rejected steps;
/// a failure at `x0` itself is returned.
pub fn solve<R: Residual>(f: &mut R, x0: &[f64], bounds: &[(f64, f64)], opts: &LmOptions) -> Result<LmOutcome> {
    if x0.len() != bounds.len() {
        return Err(TrimError::Model(format!(
            "{} unknowns but {} bounds",
            x0.len(),
            bounds.len()
        )));
    }
    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let mut r = f.eval(&x)?;
    f.accept();
    if r.len() < x.len() {
        return Err(TrimError::Model(format!(
            "{} equations for {} unknowns",
            r.len(),
            x.len()
        )));
    }
    let mut cost = norm(&r);
    let mut damping = opts.initial_damping;
    let mut iterations = 0;
    let mut history = vec![cost];

    while cost >= opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(f, &x, &r, bounds, opts.fd_fraction)?;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);

        let mut accepted = false;
        let mut short_step = false;
        while damping < 1e12 {
            let mut a = jtj.clone();
            for i in 0..x.len() {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                damping *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            project(&mut trial, bounds);
            let moved = norm(&trial.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
            if moved < opts.step_tolerance {
                short_step = true;
                break;
            }
            match f.eval(&trial) {
                Ok(rt) if norm(&rt) < cost => {
                    f.accept();
                    x = trial;
                    cost = norm(&rt);
                    r = rt;
                    damping = (damping / 10.0).max(1e-12);
                    accepted = true;
                    break;
                }
                _ => damping *= 10.0,
            }
        }
        if !accepted || short_step {
            break;
        }
        history.push(cost);
        if opts.stall_window > 0 && history.len() > opts.stall_window {
            let before = history[history.len() - 1 - opts.stall_window];
            if cost > 0.99 * before {
                break;
            }
        }
    }

    Ok(LmOutcome {
        converged: cost < opts.tolerance,
        x,
        residual: r,
        norm: cost,
        iterations,
    })
}
