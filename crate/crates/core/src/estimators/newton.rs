//! Damped Newton minimization for small smooth convex objectives.

use nalgebra::{DMatrix, DVector};

pub(crate) struct Evaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

pub(crate) struct NewtonOutcome {
    pub params: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes with Newton steps and backtracking; stops when the relative
/// decrease of the objective falls below `tol`.
pub(crate) fn minimize<F, V>(
    mut eval: F,
    value_only: V,
    x0: DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> NewtonOutcome
where
    F: FnMut(&DVector<f64>) -> Evaluation,
    V: Fn(&DVector<f64>) -> f64,
{
    let mut x = x0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let Evaluation {
            value,
            gradient,
            mut hessian,
        } = eval(&x);
        let n = hessian.nrows();
        for i in 0..n {
            hessian[(i, i)] += 1e-10;
        }
        let direction = match hessian.cholesky() {
            Some(ch) => ch.solve(&gradient),
            None => gradient.clone(),
        };
        let slope = gradient.dot(&direction);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let candidate = &x - step * &direction;
            let v = value_only(&candidate);
            if v.is_finite() && v <= value - 1e-4 * step * slope {
                accepted = Some((candidate, v));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            converged = true;
            break;
        };
        x = next;
        if (value - next_value).abs() <= tol * value.abs().max(1e-12) {
            converged = true;
            break;
        }
    }
    NewtonOutcome {
        params: x,
        iterations,
        converged,
    }
}
