//! Meta-learners: one pooled outcome model (S), one model per agent (T), and
//! the inverse-propensity weighted pooled model (S+IPW).

use std::fmt;
use std::str::FromStr;

use super::logistic::{fit_logistic, LinearLogisticModel};
use super::mlp::{fit_mlp, MlpModel};
use super::propensity::{fit_propensity, PropensityModel};
use super::{EstimatorHyper, FeatureMap, ModelKind, OutcomeModel};
use crate::domain::{AgentId, Dataset};
use crate::error::{Error, Result};

/// Agents with fewer training rows than this trigger a warning.
const SMALL_AGENT_ROWS: usize = 50;

/// Share of an agent's rows outside another agent's covariate range above
/// which the pair is flagged as an overlap violation.
const OVERLAP_FLAG: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Linear(LinearLogisticModel),
    Mlp(MlpModel),
}

impl Classifier {
    pub fn predict_proba(&self, features: &[f64]) -> f64 {
        match self {
            Classifier::Linear(m) => m.predict_proba(features),
            Classifier::Mlp(m) => m.predict_proba(features),
        }
    }

    fn fit(
        kind: ModelKind,
        features: &[Vec<f64>],
        labels: &[bool],
        weights: Option<&[f64]>,
        hyper: &EstimatorHyper,
        feature_map: FeatureMap,
    ) -> Result<Self> {
        Ok(match kind {
            ModelKind::Linear => {
                let mut m = fit_logistic(features, labels, weights, &hyper.logistic)?;
                m.feature_map = feature_map;
                Classifier::Linear(m)
            }
            ModelKind::Mlp => {
                let mut m = fit_mlp(features, labels, weights, &hyper.mlp)?;
                m.feature_map = feature_map;
                Classifier::Mlp(m)
            }
        })
    }
}

fn labels(ds: &Dataset) -> Vec<bool> {
    ds.records().iter().map(|r| r.d).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SLearner {
    pub model: Classifier,
    pub feature_map: FeatureMap,
    pub num_agents: usize,
}

impl OutcomeModel for SLearner {
    fn num_agents(&self) -> usize {
        self.num_agents
    }

    fn predict(&self, x: &[f64], agent: AgentId) -> Result<f64> {
        Ok(self
            .model
            .predict_proba(&self.feature_map.encode(x, agent)?))
    }
}

fn fit_pooled(
    train: &Dataset,
    kind: ModelKind,
    hyper: &EstimatorHyper,
    weights: Option<&[f64]>,
) -> Result<SLearner> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let feature_map = FeatureMap::WithAgentOneHot {
        dim: train.covariate_dim(),
        agents: train.num_agents(),
    };
    let features = train
        .records()
        .iter()
        .map(|r| feature_map.encode(&r.x, r.agent))
        .collect::<Result<Vec<_>>>()?;
    let model = Classifier::fit(
        kind,
        &features,
        &labels(train),
        weights,
        hyper,
        feature_map.clone(),
    )?;
    Ok(SLearner {
        model,
        feature_map,
        num_agents: train.num_agents(),
    })
}

pub fn fit_s_learner(train: &Dataset, kind: ModelKind, hyper: &EstimatorHyper) -> Result<SLearner> {
    fit_pooled(train, kind, hyper, None)
}

/// Per-agent covariate ranges and how often each agent's rows fall outside
/// another agent's range (where a T-learner has to extrapolate).
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    /// `ranges[p][j] = (min, max)` of covariate `j` among agent `p`'s rows.
    pub ranges: Vec<Vec<(f64, f64)>>,
    /// `outside[p][q]`: share of agent `q`'s rows outside agent `p`'s box.
    pub outside: Vec<Vec<f64>>,
}

impl OverlapReport {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let dim = ds.covariate_dim();
        let n = ds.num_agents();
        let mut ranges = vec![vec![(f64::INFINITY, f64::NEG_INFINITY); dim]; n];
        for r in ds.records() {
            for (range, &v) in ranges[r.agent.0].iter_mut().zip(&r.x) {
                range.0 = range.0.min(v);
                range.1 = range.1.max(v);
            }
        }
        let counts = ds.agent_counts();
        let mut outside = vec![vec![0.0; n]; n];
        for r in ds.records() {
            for (p, row) in outside.iter_mut().enumerate() {
                let out =
                    r.x.iter()
                        .zip(&ranges[p])
                        .any(|(&v, &(lo, hi))| v < lo || v > hi);
                if out {
                    row[r.agent.0] += 1.0;
                }
            }
        }
        for row in &mut outside {
            for (q, v) in row.iter_mut().enumerate() {
                if counts[q] > 0 {
                    *v /= counts[q] as f64;
                }
            }
        }
        Self { ranges, outside }
    }

    /// Ordered pairs `(model agent, population agent)` whose counterfactuals
    /// rely mostly on extrapolation.
    pub fn violations(&self) -> Vec<(AgentId, AgentId, f64)> {
        let mut out = Vec::new();
        for (p, row) in self.outside.iter().enumerate() {
            for (q, &v) in row.iter().enumerate() {
                if p != q && v > OVERLAP_FLAG {
                    out.push((AgentId(p), AgentId(q), v));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TLearner {
    pub models: Vec<Classifier>,
    pub overlap: OverlapReport,
}

impl OutcomeModel for TLearner {
    fn num_agents(&self) -> usize {
        self.models.len()
    }

    fn predict(&self, x: &[f64], agent: AgentId) -> Result<f64> {
        let model = self
            .models
            .get(agent.0)
            .ok_or(Error::UnknownAgent(agent.0))?;
        Ok(model.predict_proba(x))
    }
}

pub fn fit_t_learner(train: &Dataset, kind: ModelKind, hyper: &EstimatorHyper) -> Result<TLearner> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts = train.agent_counts();
    if let Some(p) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!("agent {p} has no training rows")));
    }
    for (p, &c) in counts.iter().enumerate() {
        if c < SMALL_AGENT_ROWS {
            log::warn!("agent {p} has only {c} training rows");
        }
    }
    let dim = train.covariate_dim();
    let mut features = vec![Vec::new(); counts.len()];
    let mut ys = vec![Vec::new(); counts.len()];
    for r in train.records() {
        features[r.agent.0].push(r.x.clone());
        ys[r.agent.0].push(r.d);
    }
    let models = features
        .iter()
        .zip(&ys)
        .map(|(f, y)| Classifier::fit(kind, f, y, None, hyper, FeatureMap::Raw { dim }))
        .collect::<Result<Vec<_>>>()?;
    let overlap = OverlapReport::from_dataset(train);
    let flagged = overlap.violations();
    if !flagged.is_empty() {
        log::warn!(
            "{} agent pairs rely on extrapolated counterfactuals",
            flagged.len()
        );
    }
    Ok(TLearner { models, overlap })
}

/// How inverse-propensity weights are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpwWeighting {
    /// `(1/P) / propensity`, averaging about one per agent.
    Stabilized,
    /// `1 / propensity`.
    Raw,
}

/// How S+IPW averages counterfactual predictions over a test population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpwMean {
    Unweighted,
    /// Each test row weighted by its own inverse-propensity weight.
    Weighted,
}

impl fmt::Display for IpwWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IpwWeighting::Stabilized => "stabilized",
            IpwWeighting::Raw => "raw",
        })
    }
}

impl FromStr for IpwWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "stabilized" => Ok(IpwWeighting::Stabilized),
            "raw" => Ok(IpwWeighting::Raw),
            other => Err(Error::parse(
                "ipw weighting",
                format!("unknown value {other:?}"),
            )),
        }
    }
}

impl fmt::Display for IpwMean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IpwMean::Unweighted => "unweighted",
            IpwMean::Weighted => "weighted",
        })
    }
}

impl FromStr for IpwMean {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unweighted" => Ok(IpwMean::Unweighted),
            "weighted" => Ok(IpwMean::Weighted),
            other => Err(Error::parse("ipw mean", format!("unknown value {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SIpwLearner {
    pub outcome: SLearner,
    pub propensity: PropensityModel,
    /// Training weight of each training row, in dataset order.
    pub weights: Vec<f64>,
    pub weighting: IpwWeighting,
    pub mean_mode: IpwMean,
}

impl SIpwLearner {
    pub fn row_weights(&self, ds: &Dataset) -> Result<Vec<f64>> {
        ipw_weights(&self.propensity, ds, self.weighting)
    }
}

fn ipw_weights(
    propensity: &PropensityModel,
    ds: &Dataset,
    weighting: IpwWeighting,
) -> Result<Vec<f64>> {
    let marginal = match weighting {
        IpwWeighting::Stabilized => 1.0 / propensity.num_agents() as f64,
        IpwWeighting::Raw => 1.0,
    };
    ds.records()
        .iter()
        .map(|r| Ok(marginal / propensity.prob(&r.x, r.agent)?))
        .collect()
}

impl OutcomeModel for SIpwLearner {
    fn num_agents(&self) -> usize {
        self.outcome.num_agents
    }

    fn predict(&self, x: &[f64], agent: AgentId) -> Result<f64> {
        self.outcome.predict(x, agent)
    }

    fn averaging_weights(&self, test: &Dataset) -> Result<Option<Vec<f64>>> {
        match self.mean_mode {
            IpwMean::Unweighted => Ok(None),
            IpwMean::Weighted => self.row_weights(test).map(Some),
        }
    }
}

pub fn fit_s_ipw(train: &Dataset, kind: ModelKind, hyper: &EstimatorHyper) -> Result<SIpwLearner> {
    let propensity = fit_propensity(train, &hyper.propensity, hyper.propensity_clip)?;
    let weights = ipw_weights(&propensity, train, hyper.weighting)?;
    let outcome = fit_pooled(train, kind, hyper, Some(&weights))?;
    Ok(SIpwLearner {
        outcome,
        propensity,
        weights,
        weighting: hyper.weighting,
        mean_mode: hyper.ipw_mean,
    })
}
