//! Outcome models, propensity models and the pairwise causal effect
//! estimators built on them.

mod newton;

pub mod learners;
pub mod logistic;
pub mod mlp;
pub mod propensity;
pub mod psm;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::domain::{AgentId, Dataset};
use crate::error::{Error, Result};
use crate::io::{fmt_sig, write_atomic};
use crate::synthgen::GamingOracle;

pub use learners::{
    fit_s_ipw, fit_s_learner, fit_t_learner, Classifier, IpwMean, IpwWeighting, OverlapReport,
    SIpwLearner, SLearner, TLearner,
};
pub use logistic::{fit_logistic, logistic_objective, LinearLogisticModel, LogisticHyper, Solver};
pub use mlp::{fit_mlp, mlp_objective, MlpHyper, MlpModel};
pub use propensity::{fit_propensity, propensity_objective, PropensityModel, DEFAULT_CLIP};
pub use psm::{
    greedy_matching, optimal_matching_cost, psm_ate, psm_ate_with_outcome, psm_effect_matrix,
    PsmDiagnostics, PsmOutcome, PsmSummary,
};

/// How raw covariates are turned into model inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureMap {
    Raw {
        dim: usize,
    },
    /// Covariates followed by a one-hot agent indicator.
    WithAgentOneHot {
        dim: usize,
        agents: usize,
    },
}

impl FeatureMap {
    pub fn output_dim(&self) -> usize {
        match *self {
            FeatureMap::Raw { dim } => dim,
            FeatureMap::WithAgentOneHot { dim, agents } => dim + agents,
        }
    }

    pub fn encode(&self, x: &[f64], agent: AgentId) -> Result<Vec<f64>> {
        match *self {
            FeatureMap::Raw { dim } => {
                check_dim(x, dim)?;
                Ok(x.to_vec())
            }
            FeatureMap::WithAgentOneHot { dim, agents } => {
                check_dim(x, dim)?;
                if agent.0 >= agents {
                    return Err(Error::UnknownAgent(agent.0));
                }
                let mut out = Vec::with_capacity(dim + agents);
                out.extend_from_slice(x);
                out.extend((0..agents).map(|p| if p == agent.0 { 1.0 } else { 0.0 }));
                Ok(out)
            }
        }
    }
}

fn check_dim(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::invalid(format!(
            "expected {dim} covariates, got {}",
            x.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Mlp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Linear => "linear",
            ModelKind::Mlp => "mlp",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(ModelKind::Linear),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::parse(
                "model kind",
                format!("unknown kind {other:?}"),
            )),
        }
    }
}

/// Hyperparameters shared by every estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorHyper {
    pub logistic: LogisticHyper,
    pub mlp: MlpHyper,
    pub propensity: LogisticHyper,
    pub propensity_clip: f64,
    pub weighting: IpwWeighting,
    pub ipw_mean: IpwMean,
}

impl Default for EstimatorHyper {
    fn default() -> Self {
        Self {
            logistic: LogisticHyper::default(),
            mlp: MlpHyper::default(),
            propensity: LogisticHyper::default(),
            propensity_clip: DEFAULT_CLIP,
            weighting: IpwWeighting::Stabilized,
            ipw_mean: IpwMean::Unweighted,
        }
    }
}

/// A fitted model of `P(d = 1 | x, agent)`.
pub trait OutcomeModel: Send + Sync {
    fn num_agents(&self) -> usize;

    fn predict(&self, x: &[f64], agent: AgentId) -> Result<f64>;

    /// Optional per-row weights for averaging counterfactual predictions over
    /// a test population; `None` means a plain mean.
    fn averaging_weights(&self, _test: &Dataset) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }

    /// Mean prediction for `agent` over every covariate vector in `test`.
    fn counterfactual_mean(&self, test: &Dataset, agent: AgentId) -> Result<f64> {
        let weights = self.averaging_weights(test)?;
        counterfactual_mean_with(self, test, agent, weights.as_deref())
    }
}

fn counterfactual_mean_with<M: OutcomeModel + ?Sized>(
    model: &M,
    test: &Dataset,
    agent: AgentId,
    weights: Option<&[f64]>,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if agent.0 >= model.num_agents() {
        return Err(Error::UnknownAgent(agent.0));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, r) in test.records().iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        num += w * model.predict(&r.x, agent)?;
        den += w;
    }
    Ok(num / den)
}

impl OutcomeModel for GamingOracle {
    fn num_agents(&self) -> usize {
        GamingOracle::num_agents(self)
    }

    fn predict(&self, x: &[f64], agent: AgentId) -> Result<f64> {
        self.rate(x, agent)
    }
}

/// Estimated effect of assigning agent `p` instead of `p2`, averaged over the
/// pooled test covariates.
pub fn pairwise_ate<M: OutcomeModel + ?Sized>(
    model: &M,
    test: &Dataset,
    p: AgentId,
    p2: AgentId,
) -> Result<f64> {
    let weights = model.averaging_weights(test)?;
    let a = counterfactual_mean_with(model, test, p, weights.as_deref())?;
    let b = counterfactual_mean_with(model, test, p2, weights.as_deref())?;
    Ok(a - b)
}

/// Builds the full matrix of pairwise effects from one counterfactual mean per
/// agent.
pub fn effect_matrix<M: OutcomeModel + ?Sized>(model: &M, test: &Dataset) -> Result<EffectMatrix> {
    let weights = model.averaging_weights(test)?;
    let means = (0..model.num_agents())
        .map(|p| counterfactual_mean_with(model, test, AgentId(p), weights.as_deref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectMatrix::from_fn(means.len(), |p, q| {
        means[p] - means[q]
    }))
}

/// Pairwise effect estimates `tau[p][p']`, antisymmetric with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectMatrix {
    tau: Vec<Vec<f64>>,
}

impl EffectMatrix {
    /// Antisymmetrizes an arbitrary square matrix as `(T - T^T) / 2`.
    pub fn from_raw(raw: Vec<Vec<f64>>) -> Result<Self> {
        let n = raw.len();
        if raw.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("effect matrix must be square"));
        }
        Ok(Self::from_fn(n, |p, q| raw[p][q]))
    }

    /// Evaluates `f` in both directions and keeps the antisymmetric part.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut tau = vec![vec![0.0; n]; n];
        for p in 0..n {
            for q in (p + 1)..n {
                let a = f(p, q);
                let b = f(q, p);
                let v = if a == -b { a } else { 0.5 * (a - b) };
                tau[p][q] = v;
                tau[q][p] = -v;
            }
        }
        Self { tau }
    }

    /// Mirrors given upper-triangle values (`upper(p, q)` for `p < q`).
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Self {
        let mut tau = vec![vec![0.0; n]; n];
        for p in 0..n {
            for q in (p + 1)..n {
                let v = upper(p, q);
                tau[p][q] = v;
                tau[q][p] = -v;
            }
        }
        Self { tau }
    }

    /// Accepts a matrix only if it is already antisymmetric within `tol`.
    pub fn from_antisymmetric(tau: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let n = tau.len();
        if tau.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("effect matrix must be square"));
        }
        for p in 0..n {
            for q in p..n {
                let (a, b) = (tau[p][q], tau[q][p]);
                if !a.is_finite() || !b.is_finite() || (a + b).abs() > tol {
                    return Err(Error::NotAntisymmetric {
                        row: p,
                        col: q,
                        value: a,
                        mirror: b,
                    });
                }
            }
        }
        Ok(Self { tau })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.tau[p][q]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.tau
    }

    /// Smallest off-diagonal `|tau|`; `None` for fewer than two agents.
    pub fn min_abs_offdiag(&self) -> Option<f64> {
        let n = self.len();
        (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| self.tau[p][q].abs())
            .min_by(f64::total_cmp)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["agent_id".to_string()];
        header.extend((0..self.len()).map(|p| p.to_string()));
        w.write_record(&header)?;
        for (p, row) in self.tau.iter().enumerate() {
            let mut rec = vec![p.to_string()];
            rec.extend(row.iter().map(|&v| fmt_sig(v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<effect matrix>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::parse("effect matrix", e))
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string()?.as_bytes())
    }

    /// Reads a matrix written by [`EffectMatrix::write_csv`], requiring
    /// antisymmetry within `1e-9`.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let n = header.len().saturating_sub(1);
        for (j, h) in header.iter().skip(1).enumerate() {
            if h.trim() != j.to_string() {
                return Err(Error::parse(
                    "effect matrix",
                    format!("column {} has id {h:?}", j + 1),
                ));
            }
        }
        let mut tau = Vec::with_capacity(n);
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.get(0).map(str::trim) != Some(i.to_string().as_str()) {
                return Err(Error::parse(
                    "effect matrix",
                    format!("row {i} has wrong id"),
                ));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::parse("effect matrix", e))
                })
                .collect::<Result<Vec<_>>>()?;
            tau.push(row);
        }
        Self::from_antisymmetric(tau, 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::synthgen::{generate_dataset, SynthConfig};

    #[test]
    fn feature_map_encodes_one_hot() {
        let m = FeatureMap::WithAgentOneHot { dim: 2, agents: 3 };
        assert_eq!(
            m.encode(&[0.5, -1.0], AgentId(1)).unwrap(),
            vec![0.5, -1.0, 0.0, 1.0, 0.0]
        );
        assert_eq!(m.output_dim(), 5);
        assert!(matches!(
            m.encode(&[0.0, 0.0], AgentId(3)),
            Err(Error::UnknownAgent(3))
        ));
        assert!(m.encode(&[0.0], AgentId(0)).is_err());
    }

    #[test]
    fn model_kind_round_trips() {
        for k in [ModelKind::Linear, ModelKind::Mlp] {
            assert_eq!(k.to_string().parse::<ModelKind>().unwrap(), k);
        }
        assert!("tree".parse::<ModelKind>().is_err());
    }

    #[test]
    fn effect_matrix_is_antisymmetric() {
        let m = EffectMatrix::from_raw(vec![
            vec![5.0, 1.0, 2.0],
            vec![3.0, 0.0, -1.0],
            vec![0.0, 4.0, 9.0],
        ])
        .unwrap();
        for p in 0..3 {
            assert_eq!(m.get(p, p), 0.0);
            for q in 0..3 {
                assert_eq!(m.get(p, q), -m.get(q, p));
            }
        }
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.min_abs_offdiag(), Some(1.0));
    }

    #[test]
    fn effect_matrix_rejects_asymmetric_input() {
        let err = EffectMatrix::from_antisymmetric(vec![vec![0.0, 1.0], vec![-0.5, 0.0]], 1e-12)
            .unwrap_err();
        assert!(matches!(
            err,
            Error::NotAntisymmetric { row: 0, col: 1, .. }
        ));
    }

    #[test]
    fn effect_matrix_csv_round_trip() {
        let m = EffectMatrix::from_fn(4, |p, q| (p as f64 - q as f64) * 0.123456789);
        let text = m.to_csv_string().unwrap();
        assert!(text.starts_with("agent_id,0,1,2,3\n"));
        let back = EffectMatrix::read_csv(text.as_bytes()).unwrap();
        for p in 0..4 {
            for q in 0..4 {
                assert!((back.get(p, q) - m.get(p, q)).abs() < 1e-9);
            }
        }
    }

    fn small_synth(mean_range: f64, seed: u64) -> crate::synthgen::LabeledDataset {
        let cfg = SynthConfig {
            per_agent_count: 60,
            ..SynthConfig::default().with_mean_range(mean_range)
        };
        generate_dataset(&cfg, &mut Rng::new(seed)).unwrap()
    }

    #[test]
    fn pairwise_ate_identity_and_antisymmetry() {
        let data = small_synth(1.0, 3);
        let oracle = data.oracle();
        for p in 0..5 {
            assert_eq!(
                pairwise_ate(oracle, &data.dataset, AgentId(p), AgentId(p)).unwrap(),
                0.0
            );
            for q in 0..5 {
                let a = pairwise_ate(oracle, &data.dataset, AgentId(p), AgentId(q)).unwrap();
                let b = pairwise_ate(oracle, &data.dataset, AgentId(q), AgentId(p)).unwrap();
                assert_eq!(a, -b);
            }
        }
    }

    #[test]
    fn oracle_effects_follow_lambda_order() {
        for mean_range in [0.0, 0.5, 1.0] {
            let data = small_synth(mean_range, 11);
            let lambdas: Vec<f64> = data.dataset.agents().iter().map(|a| a.lambda).collect();
            let tau = effect_matrix(data.oracle(), &data.dataset).unwrap();
            for p in 0..lambdas.len() {
                for q in 0..lambdas.len() {
                    if p != q {
                        let expected = (lambdas[q] - lambdas[p]).signum();
                        assert_eq!(tau.get(p, q).signum(), expected, "pair ({p},{q})");
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_effect_equals_response_gap_on_pooled_population() {
        // With the oracle outcome, the pooled effect is the mean gap between
        // the two agents' responses to each row's ground truth distribution.
        let data = small_synth(0.5, 5);
        let oracle = data.oracle();
        let (p, q) = (AgentId(2), AgentId(9));
        let mut gap = 0.0;
        for r in data.dataset.records() {
            let a = oracle.alpha_star(&r.x);
            let rp =
                a * oracle.response(p, 1.0).unwrap() + (1.0 - a) * oracle.response(p, 0.0).unwrap();
            let rq =
                a * oracle.response(q, 1.0).unwrap() + (1.0 - a) * oracle.response(q, 0.0).unwrap();
            gap += rp - rq;
        }
        gap /= data.dataset.len() as f64;
        let ate = pairwise_ate(oracle, &data.dataset, p, q).unwrap();
        assert!((ate - gap).abs() < 1e-12);
    }

    #[test]
    fn pairwise_ate_rejects_unknown_agent() {
        let data = small_synth(0.0, 1);
        assert!(pairwise_ate(data.oracle(), &data.dataset, AgentId(0), AgentId(20)).is_err());
    }
}
