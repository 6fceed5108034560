//! Linear logistic regression with optional sample weights.

use nalgebra::{DMatrix, DVector};

use super::newton::{self, Evaluation};
use super::FeatureMap;
use crate::error::{Error, Result};

/// Probability assigned when every training label is identical.
const DEGENERATE_PROB: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    /// Damped Newton (iteratively reweighted least squares).
    Newton,
    /// Full-batch gradient descent with a fixed step.
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticHyper {
    pub solver: Solver,
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Early stop on relative objective change.
    pub tol: f64,
}

impl Default for LogisticHyper {
    fn default() -> Self {
        Self {
            solver: Solver::Newton,
            lr: 0.5,
            epochs: 500,
            l2: 1e-3,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearLogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_map: FeatureMap,
}

impl LinearLogisticModel {
    pub fn logit(&self, features: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(features)
            .map(|(w, f)| w * f)
            .sum::<f64>()
            + self.bias
    }

    pub fn predict_proba(&self, features: &[f64]) -> f64 {
        sigmoid(self.logit(features))
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Weighted mean negative log-likelihood plus `l2/2 * |w|^2` (bias not
/// penalized), and its gradient. `params` is `[w_0, .., w_{d-1}, bias]`.
pub fn logistic_objective(
    params: &[f64],
    features: &[Vec<f64>],
    labels: &[bool],
    sample_weights: Option<&[f64]>,
    l2: f64,
) -> (f64, Vec<f64>) {
    let d = params.len() - 1;
    let total: f64 = match sample_weights {
        Some(w) => w.iter().sum(),
        None => labels.len() as f64,
    };
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (i, (x, &y)) in features.iter().zip(labels).enumerate() {
        let w = sample_weights.map_or(1.0, |s| s[i]) / total;
        let z = params[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + params[d];
        let t = if y { 1.0 } else { 0.0 };
        loss += w * (softplus(z) - t * z);
        let r = w * (sigmoid(z) - t);
        for (g, v) in grad[..d].iter_mut().zip(x) {
            *g += r * v;
        }
        grad[d] += r;
    }
    for j in 0..d {
        loss += 0.5 * l2 * params[j] * params[j];
        grad[j] += l2 * params[j];
    }
    (loss, grad)
}

fn validate(
    features: &[Vec<f64>],
    labels: &[bool],
    sample_weights: Option<&[f64]>,
) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if features.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features[0].len();
    if features.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid("feature rows have inconsistent lengths"));
    }
    if let Some(w) = sample_weights {
        if w.len() != labels.len() {
            return Err(Error::invalid("sample_weights length differs from labels"));
        }
        if w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("sample_weights must be positive and finite"));
        }
    }
    Ok(dim)
}

pub fn fit_logistic(
    features: &[Vec<f64>],
    labels: &[bool],
    sample_weights: Option<&[f64]>,
    hyper: &LogisticHyper,
) -> Result<LinearLogisticModel> {
    let dim = validate(features, labels, sample_weights)?;
    let feature_map = FeatureMap::Raw { dim };

    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        log::warn!(
            "all {} training labels are {}; fitting an intercept-only model",
            labels.len(),
            u8::from(positives > 0)
        );
        let p = if positives == 0 {
            DEGENERATE_PROB
        } else {
            1.0 - DEGENERATE_PROB
        };
        return Ok(LinearLogisticModel {
            weights: vec![0.0; dim],
            bias: (p / (1.0 - p)).ln(),
            feature_map,
        });
    }

    let params = match hyper.solver {
        Solver::Newton => fit_newton(features, labels, sample_weights, hyper, dim),
        Solver::GradientDescent => {
            fit_gradient_descent(features, labels, sample_weights, hyper, dim)
        }
    };
    Ok(LinearLogisticModel {
        weights: params[..dim].to_vec(),
        bias: params[dim],
        feature_map,
    })
}

fn fit_gradient_descent(
    features: &[Vec<f64>],
    labels: &[bool],
    sample_weights: Option<&[f64]>,
    hyper: &LogisticHyper,
    dim: usize,
) -> Vec<f64> {
    let mut params = vec![0.0; dim + 1];
    let mut prev = f64::INFINITY;
    for _ in 0..hyper.epochs {
        let (loss, grad) = logistic_objective(&params, features, labels, sample_weights, hyper.l2);
        if (prev - loss).abs() <= hyper.tol * loss.abs() {
            break;
        }
        prev = loss;
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= hyper.lr * g;
        }
    }
    params
}

fn fit_newton(
    features: &[Vec<f64>],
    labels: &[bool],
    sample_weights: Option<&[f64]>,
    hyper: &LogisticHyper,
    dim: usize,
) -> Vec<f64> {
    let n = features.len();
    let design = DMatrix::from_fn(
        n,
        dim + 1,
        |i, j| if j < dim { features[i][j] } else { 1.0 },
    );
    let total: f64 = sample_weights.map_or(n as f64, |w| w.iter().sum());
    let unit: Vec<f64> = (0..n)
        .map(|i| sample_weights.map_or(1.0, |w| w[i]) / total)
        .collect();
    let targets: Vec<f64> = labels.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
    let l2 = hyper.l2;

    let value = |beta: &DVector<f64>| -> f64 {
        let z = &design * beta;
        let mut v: f64 = z
            .iter()
            .zip(&targets)
            .zip(&unit)
            .map(|((&z, &t), &w)| w * (softplus(z) - t * z))
            .sum();
        v += 0.5 * l2 * beta.rows(0, dim).norm_squared();
        v
    };
    let eval = |beta: &DVector<f64>| -> Evaluation {
        let z = &design * beta;
        let p: Vec<f64> = z.iter().map(|&z| sigmoid(z)).collect();
        let resid = DVector::from_fn(n, |i, _| unit[i] * (p[i] - targets[i]));
        let mut gradient = design.transpose() * resid;
        let curvature = DVector::from_fn(n, |i, _| unit[i] * p[i] * (1.0 - p[i]));
        let mut weighted = design.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= curvature[i];
        }
        let mut hessian = design.transpose() * weighted;
        for j in 0..dim {
            gradient[j] += l2 * beta[j];
            hessian[(j, j)] += l2;
        }
        Evaluation {
            value: value(beta),
            gradient,
            hessian,
        }
    };
    let outcome = newton::minimize(
        eval,
        value,
        DVector::zeros(dim + 1),
        hyper.epochs,
        hyper.tol,
    );
    if !outcome.converged {
        log::warn!(
            "logistic fit stopped after {} Newton iterations",
            outcome.iterations
        );
    }
    outcome.params.iter().copied().collect()
}
