//! Small fully connected network with rectifier hidden layers and a sigmoid
//! output, trained full-batch with Adam.

use rand::Rng as _;

use super::logistic::{sigmoid, softplus};
use super::FeatureMap;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpHyper {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    pub tol: f64,
    /// Seeds the weight initialization.
    pub seed: u64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            lr: 0.01,
            epochs: 500,
            l2: 1e-3,
            tol: 1e-7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// Layer widths from input to the single output unit.
    pub sizes: Vec<usize>,
    /// Per layer: an `out x in` row-major weight block followed by `out` biases.
    pub params: Vec<f64>,
    pub feature_map: FeatureMap,
}

impl MlpModel {
    pub fn predict_proba(&self, features: &[f64]) -> f64 {
        sigmoid(forward(&self.params, &self.sizes, features).output)
    }
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

struct Forward {
    /// Activations per layer, including the input.
    activations: Vec<Vec<f64>>,
    /// Pre-activations per non-input layer.
    pre: Vec<Vec<f64>>,
    output: f64,
}

fn forward(params: &[f64], sizes: &[usize], x: &[f64]) -> Forward {
    let mut activations = vec![x.to_vec()];
    let mut pre = Vec::with_capacity(sizes.len() - 1);
    let mut offset = 0;
    let last = sizes.len() - 2;
    for (l, w) in sizes.windows(2).enumerate() {
        let (n_in, n_out) = (w[0], w[1]);
        let weights = &params[offset..offset + n_in * n_out];
        let biases = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        offset += n_in * n_out + n_out;
        let input = activations.last().expect("input layer present");
        let z: Vec<f64> = (0..n_out)
            .map(|o| {
                weights[o * n_in..(o + 1) * n_in]
                    .iter()
                    .zip(input)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + biases[o]
            })
            .collect();
        let a = if l == last {
            z.clone()
        } else {
            z.iter().map(|v| v.max(0.0)).collect()
        };
        pre.push(z);
        activations.push(a);
    }
    let output = activations.last().expect("output layer present")[0];
    Forward {
        activations,
        pre,
        output,
    }
}

/// Weighted mean binary cross-entropy plus `l2/2` times the squared weights
/// (biases not penalized), and its gradient with respect to `params`.
pub fn mlp_objective(
    params: &[f64],
    sizes: &[usize],
    features: &[Vec<f64>],
    labels: &[bool],
    sample_weights: Option<&[f64]>,
    l2: f64,
) -> (f64, Vec<f64>) {
    let total: f64 = sample_weights.map_or(labels.len() as f64, |w| w.iter().sum());
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    let offsets: Vec<usize> = sizes
        .windows(2)
        .scan(0, |acc, w| {
            let start = *acc;
            *acc += w[0] * w[1] + w[1];
            Some(start)
        })
        .collect();

    for (i, (x, &y)) in features.iter().zip(labels).enumerate() {
        let w = sample_weights.map_or(1.0, |s| s[i]) / total;
        let t = if y { 1.0 } else { 0.0 };
        let fw = forward(params, sizes, x);
        loss += w * (softplus(fw.output) - t * fw.output);

        let mut delta = vec![w * (sigmoid(fw.output) - t)];
        for l in (0..sizes.len() - 1).rev() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let off = offsets[l];
            let input = &fw.activations[l];
            for o in 0..n_out {
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += delta[o] * a;
                }
                grad[off + n_in * n_out + o] += delta[o];
            }
            if l > 0 {
                let weights = &params[off..off + n_in * n_out];
                let prev_pre = &fw.pre[l - 1];
                delta = (0..n_in)
                    .map(|j| {
                        if prev_pre[j] <= 0.0 {
                            0.0
                        } else {
                            (0..n_out).map(|o| delta[o] * weights[o * n_in + j]).sum()
                        }
                    })
                    .collect();
            }
        }
    }

    for (l, w) in sizes.windows(2).enumerate() {
        let off = offsets[l];
        for j in off..off + w[0] * w[1] {
            loss += 0.5 * l2 * params[j] * params[j];
            grad[j] += l2 * params[j];
        }
    }
    (loss, grad)
}

fn init_params(sizes: &[usize], seed: u64) -> Vec<f64> {
    let mut rng = Rng::new(seed);
    let mut params = Vec::with_capacity(param_count(sizes));
    for w in sizes.windows(2) {
        let bound = (6.0 / w[0] as f64).sqrt();
        params.extend((0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)));
        params.extend(std::iter::repeat_n(0.0, w[1]));
    }
    params
}

pub fn fit_mlp(
    features: &[Vec<f64>],
    labels: &[bool],
    sample_weights: Option<&[f64]>,
    hyper: &MlpHyper,
) -> Result<MlpModel> {
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if features.len() != labels.len() {
        return Err(Error::invalid("features and labels differ in length"));
    }
    if let Some(w) = sample_weights {
        if w.len() != labels.len() || w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(
                "sample_weights must be positive, finite and one per row",
            ));
        }
    }
    if hyper.hidden.iter().any(|&h| h == 0) {
        return Err(Error::invalid("hidden layer widths must be positive"));
    }
    let dim = features[0].len();
    if features.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid("feature rows have inconsistent lengths"));
    }
    let mut sizes = vec![dim];
    sizes.extend(&hyper.hidden);
    sizes.push(1);

    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        log::warn!("all training labels identical; network will be intercept-dominated");
    }

    let mut params = init_params(&sizes, hyper.seed);
    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut prev = f64::INFINITY;
    for t in 1..=hyper.epochs {
        let (loss, grad) =
            mlp_objective(&params, &sizes, features, labels, sample_weights, hyper.l2);
        if (prev - loss).abs() <= hyper.tol * loss.abs() {
            break;
        }
        prev = loss;
        let c1 = 1.0 - b1.powi(t as i32);
        let c2 = 1.0 - b2.powi(t as i32);
        for k in 0..params.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
            v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
            params[k] -= hyper.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
        }
    }
    Ok(MlpModel {
        sizes,
        params,
        feature_map: FeatureMap::Raw { dim },
    })
}
