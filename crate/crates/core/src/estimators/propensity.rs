//! Multinomial logistic model of agent identity given covariates.

use nalgebra::{DMatrix, DVector};

use super::logistic::{LogisticHyper, Solver};
use super::newton::{self, Evaluation};
use crate::domain::{AgentId, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_CLIP: f64 = 1e-6;

/// Softmax regression over agents; agent 0 is the reference class with fixed
/// zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    /// One `[w_0, .., w_{d-1}, bias]` row per agent.
    pub coefs: Vec<Vec<f64>>,
    pub dim: usize,
    pub clip: f64,
}

impl PropensityModel {
    pub fn num_agents(&self) -> usize {
        self.coefs.len()
    }

    /// Unclipped probability simplex over agents.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = self.coefs.iter().map(|c| linear(c, x)).collect();
        softmax(&z)
    }

    /// Probability of `agent` clipped to `[clip, 1 - clip]`.
    pub fn prob(&self, x: &[f64], agent: AgentId) -> Result<f64> {
        if agent.0 >= self.num_agents() {
            return Err(Error::UnknownAgent(agent.0));
        }
        let p = self.predict(x)[agent.0];
        Ok(p.clamp(self.clip, 1.0 - self.clip))
    }
}

fn linear(c: &[f64], x: &[f64]) -> f64 {
    let d = c.len() - 1;
    c[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + c[d]
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mean cross-entropy plus `l2/2` times the squared non-bias coefficients,
/// and its gradient. `params` holds rows for agents `1..classes`, each
/// `[w_0, .., w_{d-1}, bias]`.
pub fn propensity_objective(
    params: &[f64],
    features: &[Vec<f64>],
    classes: &[usize],
    num_classes: usize,
    l2: f64,
) -> (f64, Vec<f64>) {
    let n = features.len() as f64;
    let width = params.len() / (num_classes - 1);
    let d = width - 1;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    let mut z = vec![0.0; num_classes];
    for (x, &c) in features.iter().zip(classes) {
        for k in 1..num_classes {
            z[k] = linear(&params[(k - 1) * width..k * width], x);
        }
        loss += (log_sum_exp(&z) - z[c]) / n;
        let p = softmax(&z);
        for k in 1..num_classes {
            let r = (p[k] - if k == c { 1.0 } else { 0.0 }) / n;
            let row = &mut grad[(k - 1) * width..k * width];
            for (g, v) in row[..d].iter_mut().zip(x) {
                *g += r * v;
            }
            row[d] += r;
        }
    }
    for k in 0..num_classes - 1 {
        for j in 0..d {
            let i = k * width + j;
            loss += 0.5 * l2 * params[i] * params[i];
            grad[i] += l2 * params[i];
        }
    }
    (loss, grad)
}

pub fn fit_propensity(
    train: &Dataset,
    hyper: &LogisticHyper,
    clip: f64,
) -> Result<PropensityModel> {
    let num_classes = train.num_agents();
    if num_classes < 2 {
        return Err(Error::invalid("propensity model needs at least two agents"));
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(clip > 0.0 && clip < 0.5) {
        return Err(Error::invalid(format!(
            "propensity clip must be in (0, 0.5), got {clip}"
        )));
    }
    let features: Vec<Vec<f64>> = train.records().iter().map(|r| r.x.clone()).collect();
    let classes: Vec<usize> = train.records().iter().map(|r| r.agent.0).collect();
    let dim = train.covariate_dim();
    let width = dim + 1;
    let n_params = (num_classes - 1) * width;

    let params = match hyper.solver {
        Solver::GradientDescent => {
            let mut params = vec![0.0; n_params];
            let mut prev = f64::INFINITY;
            for _ in 0..hyper.epochs {
                let (loss, grad) =
                    propensity_objective(&params, &features, &classes, num_classes, hyper.l2);
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
        Solver::Newton => {
            let value = |beta: &DVector<f64>| {
                propensity_objective(beta.as_slice(), &features, &classes, num_classes, hyper.l2).0
            };
            let eval = |beta: &DVector<f64>| {
                let (value, grad) = propensity_objective(
                    beta.as_slice(),
                    &features,
                    &classes,
                    num_classes,
                    hyper.l2,
                );
                Evaluation {
                    value,
                    gradient: DVector::from_vec(grad),
                    hessian: propensity_hessian(beta.as_slice(), &features, num_classes, hyper.l2),
                }
            };
            let outcome = newton::minimize(
                eval,
                value,
                DVector::zeros(n_params),
                hyper.epochs,
                hyper.tol,
            );
            if !outcome.converged {
                log::warn!(
                    "propensity fit stopped after {} Newton iterations",
                    outcome.iterations
                );
            }
            outcome.params.iter().copied().collect()
        }
    };

    let mut coefs = vec![vec![0.0; width]];
    coefs.extend(params.chunks(width).map(<[f64]>::to_vec));
    Ok(PropensityModel { coefs, dim, clip })
}

fn propensity_hessian(
    params: &[f64],
    features: &[Vec<f64>],
    num_classes: usize,
    l2: f64,
) -> DMatrix<f64> {
    let width = params.len() / (num_classes - 1);
    let d = width - 1;
    let m = num_classes - 1;
    let n = features.len() as f64;
    let mut h = DMatrix::zeros(params.len(), params.len());
    let mut z = vec![0.0; num_classes];
    let mut xt = vec![1.0; width];
    // Accumulate the outer product of the augmented covariates once per
    // class pair, weighted by the softmax curvature.
    for x in features {
        for k in 1..num_classes {
            z[k] = linear(&params[(k - 1) * width..k * width], x);
        }
        let p = softmax(&z);
        xt[..d].copy_from_slice(x);
        for a in 0..m {
            for b in a..m {
                let c = (if a == b { p[a + 1] } else { 0.0 } - p[a + 1] * p[b + 1]) / n;
                if c == 0.0 {
                    continue;
                }
                for i in 0..width {
                    let ci = c * xt[i];
                    for j in 0..width {
                        h[(a * width + i, b * width + j)] += ci * xt[j];
                    }
                }
            }
        }
    }
    for a in 0..m {
        for b in (a + 1)..m {
            for i in 0..width {
                for j in 0..width {
                    h[(b * width + j, a * width + i)] = h[(a * width + i, b * width + j)];
                }
            }
        }
        for j in 0..d {
            h[(a * width + j, a * width + j)] += l2;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AgentSpec, ObservationRecord};

    fn dataset(rows: Vec<(Vec<f64>, usize)>, agents: usize) -> Dataset {
        let specs = (0..agents)
            .map(|i| AgentSpec::new(i, 1.0).unwrap())
            .collect();
        let dim = rows[0].0.len();
        let records = rows
            .into_iter()
            .map(|(x, a)| ObservationRecord {
                x,
                d: false,
                agent: AgentId(a),
                hidden: None,
            })
            .collect();
        Dataset::new(records, specs, dim).unwrap()
    }

    #[test]
    fn separable_two_agents() {
        let mut rows = Vec::new();
        for i in 0..50 {
            let jitter = (i as f64 * 0.37).sin() * 0.3;
            rows.push((vec![-3.0 + jitter], 0));
            rows.push((vec![3.0 + jitter], 1));
        }
        let ds = dataset(rows, 2);
        let m = fit_propensity(&ds, &LogisticHyper::default(), DEFAULT_CLIP).unwrap();
        assert!(m.prob(&[-3.0], AgentId(0)).unwrap() > 0.95);
        assert!(m.prob(&[3.0], AgentId(1)).unwrap() > 0.95);
    }

    #[test]
    fn uninformative_covariates_give_frequencies() {
        let mut rows = Vec::new();
        for i in 0..300 {
            let x = vec![
                ((i * 7919) % 97) as f64 / 97.0,
                ((i * 104729) % 89) as f64 / 89.0,
            ];
            let agent = if i % 6 == 0 {
                0
            } else if i % 6 < 3 {
                1
            } else {
                2
            };
            rows.push((x, agent));
        }
        let ds = dataset(rows, 3);
        let m = fit_propensity(&ds, &LogisticHyper::default(), DEFAULT_CLIP).unwrap();
        let p = m.predict(&[0.5, 0.5]);
        assert!((p[0] - 1.0 / 6.0).abs() < 0.05, "{p:?}");
        assert!((p[1] - 2.0 / 6.0).abs() < 0.05, "{p:?}");
        assert!((p[2] - 3.0 / 6.0).abs() < 0.05, "{p:?}");
    }

    #[test]
    fn simplex_and_clip() {
        let m = PropensityModel {
            coefs: vec![vec![0.0, 0.0], vec![50.0, 0.0], vec![-50.0, 0.0]],
            dim: 1,
            clip: 1e-6,
        };
        let p = m.predict(&[1.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v > 0.0));
        assert_eq!(m.prob(&[1.0], AgentId(2)).unwrap(), 1e-6);
        assert_eq!(m.prob(&[1.0], AgentId(1)).unwrap(), 1.0 - 1e-6);
        assert!(m.prob(&[1.0], AgentId(3)).is_err());
    }

    #[test]
    fn single_agent_is_an_error() {
        let ds = dataset(vec![(vec![0.0], 0), (vec![1.0], 0)], 1);
        assert!(fit_propensity(&ds, &LogisticHyper::default(), DEFAULT_CLIP).is_err());
    }

    #[test]
    fn newton_matches_gradient_descent() {
        let rows: Vec<(Vec<f64>, usize)> = (0..120)
            .map(|i| {
                let x = (i as f64 * 0.61).sin() * 2.0;
                (
                    vec![x],
                    if x + (i as f64 * 1.3).cos() > 0.5 {
                        2
                    } else {
                        i % 2
                    },
                )
            })
            .collect();
        let ds = dataset(rows, 3);
        let a = fit_propensity(&ds, &LogisticHyper::default(), DEFAULT_CLIP).unwrap();
        let b = fit_propensity(
            &ds,
            &LogisticHyper {
                solver: Solver::GradientDescent,
                lr: 1.0,
                epochs: 50_000,
                tol: 1e-15,
                ..LogisticHyper::default()
            },
            DEFAULT_CLIP,
        )
        .unwrap();
        for x in [-2.0, 0.0, 1.5] {
            let (pa, pb) = (a.predict(&[x]), b.predict(&[x]));
            for k in 0..3 {
                assert!((pa[k] - pb[k]).abs() < 1e-3, "{pa:?} {pb:?}");
            }
        }
    }
}
