//! Non-causal rankings: observed payout rate, random order, and per-agent
//! mean anomaly scores from k-nearest-neighbor distance and ECOD.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::domain::{AgentId, Dataset, Ranking};
use crate::error::{Error, Result};
use crate::io::{fmt_sig, write_atomic};
use crate::rng::Rng;

pub const DEFAULT_KNN_K: usize = 5;

/// Agents by descending observed decision rate; agents without records last.
pub fn payout_only_ranking(ds: &Dataset) -> Result<Ranking> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rates: Vec<f64> = ds
        .agent_rates()
        .into_iter()
        .map(|r| r.unwrap_or(f64::NAN))
        .collect();
    Ok(Ranking::from_scores_desc(&rates))
}

pub fn random_ranking(num_agents: usize, rng: &mut Rng) -> Result<Ranking> {
    if num_agents == 0 {
        return Err(Error::invalid("cannot rank zero agents"));
    }
    let mut order: Vec<AgentId> = (0..num_agents).map(AgentId).collect();
    order.shuffle(rng);
    Ranking::new(order)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyScores {
    /// One score per record, higher meaning more anomalous.
    pub record_scores: Vec<f64>,
    pub record_agents: Vec<AgentId>,
    /// Mean record score per agent; NaN for agents without records.
    pub agent_means: Vec<f64>,
}

impl AnomalyScores {
    fn new(ds: &Dataset, record_scores: Vec<f64>) -> Self {
        let n = ds.num_agents();
        let mut sums = vec![0.0; n];
        let mut counts = vec![0usize; n];
        for (r, s) in ds.records().iter().zip(&record_scores) {
            sums[r.agent.0] += s;
            counts[r.agent.0] += 1;
        }
        let agent_means = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
            .collect();
        Self {
            record_scores,
            record_agents: ds.records().iter().map(|r| r.agent).collect(),
            agent_means,
        }
    }

    pub fn ranking(&self) -> Ranking {
        Ranking::from_scores_desc(&self.agent_means)
    }

    /// CSV `record_index,agent_id,score`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["record_index", "agent_id", "score"])?;
        for (i, (a, s)) in self
            .record_agents
            .iter()
            .zip(&self.record_scores)
            .enumerate()
        {
            w.write_record([i.to_string(), a.0.to_string(), fmt_sig(*s)])?;
        }
        w.flush().map_err(|e| Error::io("<anomaly scores>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::parse("anomaly scores", e))
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string()?.as_bytes())
    }
}

/// Rows of `(x, d)`, optionally z-scored per column.
pub fn anomaly_features(ds: &Dataset, standardize: bool) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = ds
        .records()
        .iter()
        .map(|r| {
            let mut v = r.x.clone();
            v.push(r.d_f64());
            v
        })
        .collect();
    if standardize && !rows.is_empty() {
        let n = rows.len() as f64;
        for j in 0..rows[0].len() {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            for r in &mut rows {
                r[j] = if sd > 0.0 { (r[j] - mean) / sd } else { 0.0 };
            }
        }
    }
    rows
}

fn map_rows<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Distance from each row to its `k`-th nearest other row.
pub fn knn_scores(rows: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if k >= rows.len() {
        return Err(Error::invalid(format!(
            "k = {k} needs more than {} records",
            rows.len()
        )));
    }
    Ok(map_rows(rows.len(), |i| {
        let mut d2: Vec<f64> = rows
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, r)| r.iter().zip(&rows[i]).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        let (_, kth, _) = d2.select_nth_unstable_by(k - 1, f64::total_cmp);
        kth.sqrt()
    }))
}

pub fn knn_anomaly_ranking(
    ds: &Dataset,
    k: usize,
    standardize: bool,
) -> Result<(Ranking, AnomalyScores)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (p, c) in ds.agent_counts().into_iter().enumerate() {
        if c < k + 1 {
            log::warn!("agent {p} has {c} records, fewer than k + 1 = {}", k + 1);
        }
    }
    let scores = AnomalyScores::new(ds, knn_scores(&anomaly_features(ds, standardize), k)?);
    Ok((scores.ranking(), scores))
}

fn skewness(col: &[f64]) -> f64 {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let m2 = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = col.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    if m2 <= 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

/// `-ln F(v)` for each value, `F` the empirical CDF `P(X <= v)`.
fn neg_log_ecdf(col: &[f64]) -> Vec<f64> {
    let n = col.len();
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    col.iter()
        .map(|v| {
            let le = sorted.partition_point(|s| s <= v);
            -((le as f64) / n as f64).ln()
        })
        .collect()
}

/// ECOD outlier scores: per dimension the largest of the left-tail,
/// right-tail and skewness-directed tail scores, summed over dimensions.
pub fn ecod_scores(rows: &[Vec<f64>]) -> Vec<f64> {
    if rows.is_empty() {
        return Vec::new();
    }
    let dim = rows[0].len();
    let mut total = vec![0.0; rows.len()];
    for j in 0..dim {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let neg: Vec<f64> = col.iter().map(|v| -v).collect();
        let left = neg_log_ecdf(&col);
        let right = neg_log_ecdf(&neg);
        let s = skewness(&col);
        for i in 0..rows.len() {
            let directed = if s < 0.0 {
                left[i]
            } else if s > 0.0 {
                right[i]
            } else {
                left[i] + right[i]
            };
            total[i] += left[i].max(right[i]).max(directed);
        }
    }
    total
}

pub fn ecod_ranking(ds: &Dataset, standardize: bool) -> Result<(Ranking, AnomalyScores)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let scores = AnomalyScores::new(ds, ecod_scores(&anomaly_features(ds, standardize)));
    Ok((scores.ranking(), scores))
}
