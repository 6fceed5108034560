//! Shared domain types: agents, observation records, datasets and rankings.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Dense agent index, `0..P` within one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An agent and its gaming deterrence parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: AgentId,
    pub lambda: f64,
}

impl AgentSpec {
    pub fn new(id: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "agent {id}: lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(Self {
            id: AgentId(id),
            lambda,
        })
    }
}

/// Generator-only columns that are never visible to a detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenTruth {
    pub d_star: bool,
    pub alpha_star: f64,
    pub alpha_gamed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub x: Vec<f64>,
    pub d: bool,
    pub agent: AgentId,
    pub hidden: Option<HiddenTruth>,
}

impl ObservationRecord {
    pub fn d_f64(&self) -> f64 {
        if self.d {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<ObservationRecord>,
    agents: Vec<AgentSpec>,
    covariate_dim: usize,
}

impl Dataset {
    /// Validates that agent ids are dense, every record refers to a known
    /// agent, and every covariate vector has `covariate_dim` entries.
    pub fn new(
        records: Vec<ObservationRecord>,
        agents: Vec<AgentSpec>,
        covariate_dim: usize,
    ) -> Result<Self> {
        if covariate_dim == 0 {
            return Err(Error::invalid("covariate_dim must be positive"));
        }
        if agents.is_empty() {
            return Err(Error::invalid("at least one agent is required"));
        }
        for (i, a) in agents.iter().enumerate() {
            if a.id.0 != i {
                return Err(Error::invalid(format!(
                    "agent ids must be dense 0..P-1; position {i} holds id {}",
                    a.id
                )));
            }
        }
        for (i, r) in records.iter().enumerate() {
            if r.agent.0 >= agents.len() {
                return Err(Error::UnknownAgent(r.agent.0));
            }
            if r.x.len() != covariate_dim {
                return Err(Error::invalid(format!(
                    "record {i} has {} covariates, expected {covariate_dim}",
                    r.x.len()
                )));
            }
        }
        Ok(Self {
            records,
            agents,
            covariate_dim,
        })
    }

    pub fn records(&self) -> &[ObservationRecord] {
        &self.records
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariate_dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_hidden(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.hidden.is_some())
    }

    /// Number of records per agent, indexed by agent id.
    pub fn agent_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.agents.len()];
        for r in &self.records {
            counts[r.agent.0] += 1;
        }
        counts
    }

    /// Empirical `P(d = 1)` per agent; agents without records get `None`.
    pub fn agent_rates(&self) -> Vec<Option<f64>> {
        let mut hits = vec![0usize; self.agents.len()];
        let counts = self.agent_counts();
        for r in &self.records {
            if r.d {
                hits[r.agent.0] += 1;
            }
        }
        hits.iter()
            .zip(&counts)
            .map(|(&h, &n)| (n > 0).then(|| h as f64 / n as f64))
            .collect()
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            agents: self.agents.clone(),
            covariate_dim: self.covariate_dim,
        }
    }
}

/// Uniform record-level random partition. The train side receives
/// `floor(train_frac * n)` records; both sides keep the original record order.
pub fn split_dataset(ds: &Dataset, train_frac: f64, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid(format!(
            "train_frac must lie in (0, 1), got {train_frac}"
        )));
    }
    let n = ds.len();
    // The epsilon absorbs representation error such as 0.7 * 10 = 6.999...
    let n_train = ((train_frac * n as f64) + 1e-9).floor() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let (train_idx, test_idx) = idx.split_at(n_train);
    let mut train_idx = train_idx.to_vec();
    let mut test_idx = test_idx.to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let train = ds.subset(&train_idx);
    let test = ds.subset(&test_idx);
    for (name, part) in [("train", &train), ("test", &test)] {
        for (agent, count) in part.agent_counts().iter().enumerate() {
            if *count == 0 {
                log::warn!("agent {agent} has no records in the {name} split");
            }
        }
    }
    Ok((train, test))
}

/// A total order over agents; position 0 is the most gaming-prone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    order: Vec<AgentId>,
}

impl Ranking {
    pub fn new(order: Vec<AgentId>) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::invalid("ranking must contain at least one agent"));
        }
        let mut seen = HashSet::with_capacity(n);
        for a in &order {
            if a.0 >= n || !seen.insert(*a) {
                return Err(Error::invalid(format!(
                    "ranking is not a permutation of 0..{n}: offending id {a}"
                )));
            }
        }
        Ok(Self { order })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).map(AgentId).collect(),
        }
    }

    /// Sorts agents by descending score, ties broken by ascending id.
    /// NaN scores sort last.
    pub fn from_scores_desc(scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            let (sa, sb) = (scores[a], scores[b]);
            match (sa.is_nan(), sb.is_nan()) {
                (true, true) => a.cmp(&b),
                (true, false) => std::cmp::Ordering::Greater,
                (false, true) => std::cmp::Ordering::Less,
                _ => sb.partial_cmp(&sa).unwrap().then(a.cmp(&b)),
            }
        });
        Self {
            order: order.into_iter().map(AgentId).collect(),
        }
    }

    /// Sorts agents by ascending key, ties broken by ascending id.
    pub fn from_keys_asc(keys: &[f64]) -> Self {
        let negated: Vec<f64> = keys.iter().map(|k| -k).collect();
        Self::from_scores_desc(&negated)
    }

    pub fn order(&self) -> &[AgentId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `positions()[agent]` is the 0-based position of `agent`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (i, a) in self.order.iter().enumerate() {
            pos[a.0] = i;
        }
        pos
    }

    pub fn reversed(&self) -> Self {
        let mut order = self.order.clone();
        order.reverse();
        Self { order }
    }
}
