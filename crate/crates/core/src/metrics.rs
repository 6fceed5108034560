//! Scoring a predicted ranking against the ground-truth ranking.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::domain::Ranking;
use crate::error::{Error, Result};
use crate::io::{fmt_sig, write_atomic};

pub const DEFAULT_TOP_M: usize = 5;

/// Relevance of an agent whose ground-truth (1-based) rank is `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Relevance {
    /// `K - r`; the least gaming-prone agent has zero relevance.
    #[default]
    KMinusRank,
    /// `K + 1 - r`.
    KPlusOneMinusRank,
}

impl Relevance {
    fn value(self, k_total: usize, rank: usize) -> f64 {
        match self {
            Relevance::KMinusRank => (k_total - rank) as f64,
            Relevance::KPlusOneMinusRank => (k_total + 1 - rank) as f64,
        }
    }
}

impl fmt::Display for Relevance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relevance::KMinusRank => "k_minus_rank",
            Relevance::KPlusOneMinusRank => "k_plus_one_minus_rank",
        })
    }
}

impl FromStr for Relevance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "k_minus_rank" => Ok(Relevance::KMinusRank),
            "k_plus_one_minus_rank" => Ok(Relevance::KPlusOneMinusRank),
            other => Err(Error::parse(
                "relevance",
                format!("unknown variant {other:?}"),
            )),
        }
    }
}

fn check_pair(pred: &Ranking, truth: &Ranking) -> Result<usize> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "rankings differ in length: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    Ok(truth.len())
}

fn check_k(k: usize, total: usize) -> Result<()> {
    if k == 0 || k > total {
        return Err(Error::invalid(format!("k must be in 1..={total}, got {k}")));
    }
    Ok(())
}

fn check_top_m(top_m: usize, total: usize) -> Result<()> {
    if top_m == 0 || top_m > total {
        return Err(Error::invalid(format!(
            "top_m must be in 1..={total}, got {top_m}"
        )));
    }
    Ok(())
}

/// Share of the true top-`top_m` agents found in the predicted top `k`.
pub fn sensitivity_at_k(pred: &Ranking, truth: &Ranking, k: usize, top_m: usize) -> Result<f64> {
    let total = check_pair(pred, truth)?;
    check_k(k, total)?;
    check_top_m(top_m, total)?;
    let true_pos = truth.positions();
    let hits = pred.order()[..k]
        .iter()
        .filter(|a| true_pos[a.0] < top_m)
        .count();
    Ok(hits as f64 / top_m as f64)
}

pub fn dcg_at_k(pred: &Ranking, truth: &Ranking, k: usize, relevance: Relevance) -> Result<f64> {
    let total = check_pair(pred, truth)?;
    check_k(k, total)?;
    let true_pos = truth.positions();
    Ok(pred.order()[..k]
        .iter()
        .enumerate()
        .map(|(i, a)| relevance.value(total, true_pos[a.0] + 1) / ((i + 2) as f64).log2())
        .sum())
}

/// Mean of the sensitivity curve over `k = 1..=K`.
pub fn ausc(pred: &Ranking, truth: &Ranking, top_m: usize) -> Result<f64> {
    let total = check_pair(pred, truth)?;
    check_top_m(top_m, total)?;
    let true_pos = truth.positions();
    let mut hits = 0usize;
    let mut sum = 0.0;
    for a in pred.order() {
        if true_pos[a.0] < top_m {
            hits += 1;
        }
        sum += hits as f64 / top_m as f64;
    }
    Ok(sum / total as f64)
}

/// Commonly quoted closed form for the AUSC of a uniformly random ranking,
/// `(K - 1) / (2K)`; see [`exact_random_ausc`] for the exact value.
pub fn expected_random_ausc(k_total: usize) -> Result<f64> {
    if k_total == 0 {
        return Err(Error::invalid("K must be positive"));
    }
    Ok((k_total - 1) as f64 / (2 * k_total) as f64)
}

/// Exact expected AUSC of a uniformly random ranking, `(K + 1) / (2K)`.
///
/// `E[S_k] = k / K` for every `top_m`, and averaging over `k = 1..=K` gives
/// `(K + 1) / (2K)`. [`expected_random_ausc`] is the commonly quoted form,
/// which sums `m` from 1 to `K` as `K(K - 1)/2` and so sits `1/K` lower.
pub fn exact_random_ausc(k_total: usize) -> Result<f64> {
    if k_total == 0 {
        return Err(Error::invalid("K must be positive"));
    }
    Ok((k_total + 1) as f64 / (2 * k_total) as f64)
}

/// Smallest achievable AUSC: the true top-`top_m` agents placed last.
pub fn min_ausc(k_total: usize, top_m: usize) -> Result<f64> {
    check_top_m(top_m, k_total)?;
    Ok((1..=top_m).map(|j| j as f64 / top_m as f64).sum::<f64>() / k_total as f64)
}

/// Largest achievable AUSC: the true top-`top_m` agents placed first.
pub fn max_ausc(k_total: usize, top_m: usize) -> Result<f64> {
    check_top_m(top_m, k_total)?;
    let ramp: f64 = (1..top_m).map(|j| j as f64 / top_m as f64).sum();
    Ok((ramp + (k_total - top_m + 1) as f64) / k_total as f64)
}

/// Ranks with ties given the average of the positions they span (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation of two equally long score vectors.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("spearman inputs differ in length"));
    }
    if a.len() < 2 {
        return Err(Error::invalid("spearman needs at least two values"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::invalid("spearman inputs contain NaN"));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok(cov / (va * vb).sqrt())
}

/// Spearman correlation between the positions two rankings assign to each
/// agent.
pub fn spearman_rankings(a: &Ranking, b: &Ranking) -> Result<f64> {
    let to_f = |r: &Ranking| {
        r.positions()
            .into_iter()
            .map(|p| p as f64)
            .collect::<Vec<_>>()
    };
    spearman(&to_f(a), &to_f(b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Index `i` holds the value at `k = i + 1`.
    pub sensitivity: Vec<f64>,
    pub dcg: Vec<f64>,
    pub ausc: f64,
    pub k_total: usize,
    pub top_m: usize,
}

impl MetricsReport {
    pub fn compute(
        pred: &Ranking,
        truth: &Ranking,
        top_m: usize,
        relevance: Relevance,
    ) -> Result<Self> {
        let k_total = check_pair(pred, truth)?;
        check_top_m(top_m, k_total)?;
        let sensitivity = (1..=k_total)
            .map(|k| sensitivity_at_k(pred, truth, k, top_m))
            .collect::<Result<Vec<_>>>()?;
        let dcg = (1..=k_total)
            .map(|k| dcg_at_k(pred, truth, k, relevance))
            .collect::<Result<Vec<_>>>()?;
        let ausc = sensitivity.iter().sum::<f64>() / k_total as f64;
        Ok(Self {
            sensitivity,
            dcg,
            ausc,
            k_total,
            top_m,
        })
    }

    /// CSV `k,sensitivity,dcg` with a final `ausc,<value>,` line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "sensitivity", "dcg"])?;
        for (i, (s, d)) in self.sensitivity.iter().zip(&self.dcg).enumerate() {
            w.write_record([(i + 1).to_string(), fmt_sig(*s), fmt_sig(*d)])?;
        }
        w.write_record(["ausc".to_string(), fmt_sig(self.ausc), String::new()])?;
        w.flush().map_err(|e| Error::io("<metrics>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::parse("metrics", e))
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string()?.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AgentId;
    use crate::rng::Rng;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    fn ranking(v: &[usize]) -> Ranking {
        Ranking::new(v.iter().map(|&i| AgentId(i)).collect()).unwrap()
    }

    #[test]
    fn sensitivity_examples() {
        let truth = Ranking::identity(20);
        assert_eq!(sensitivity_at_k(&truth, &truth, 5, 5).unwrap(), 1.0);
        assert_eq!(
            sensitivity_at_k(&truth.reversed(), &truth, 5, 5).unwrap(),
            0.0
        );
        let pred = ranking(&[
            0, 10, 1, 11, 12, 2, 13, 3, 4, 5, 6, 7, 8, 9, 14, 15, 16, 17, 18, 19,
        ]);
        assert!((sensitivity_at_k(&pred, &truth, 7, 5).unwrap() - 0.6).abs() < 1e-12);
        assert!(sensitivity_at_k(&pred, &truth, 0, 5).is_err());
        assert!(sensitivity_at_k(&pred, &truth, 21, 5).is_err());
    }

    #[test]
    fn dcg_examples() {
        let truth = Ranking::identity(20);
        let v = dcg_at_k(&truth, &truth, 3, Relevance::KMinusRank).unwrap();
        let hand = 19.0 + 18.0 / 3f64.log2() + 17.0 / 2.0;
        assert!((v - hand).abs() < 1e-12);
        assert!((v - 38.857).abs() < 1e-3);
        assert_eq!(
            dcg_at_k(&truth.reversed(), &truth, 1, Relevance::KMinusRank).unwrap(),
            0.0
        );
        assert_eq!(
            dcg_at_k(&truth, &truth, 1, Relevance::KMinusRank).unwrap(),
            19.0
        );
        assert_eq!(
            dcg_at_k(&truth, &truth, 1, Relevance::KPlusOneMinusRank).unwrap(),
            20.0
        );
    }

    #[test]
    fn ausc_examples() {
        let truth = Ranking::identity(20);
        assert!((ausc(&truth, &truth, 5).unwrap() - 0.9).abs() < 1e-12);
        assert!((ausc(&truth.reversed(), &truth, 5).unwrap() - 0.15).abs() < 1e-12);
        assert!((min_ausc(20, 5).unwrap() - 0.15).abs() < 1e-12);
        assert!((max_ausc(20, 5).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn exact_random_matches_enumeration() {
        // Average AUSC over all K! rankings for small K.
        fn permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in permutations(n - 1) {
                for i in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(i, n - 1);
                    out.push(q);
                }
            }
            out
        }
        for n in 1..=6 {
            let truth = Ranking::identity(n);
            for top_m in 1..=n {
                let perms = permutations(n);
                let mean = perms
                    .iter()
                    .map(|p| ausc(&ranking(p), &truth, top_m).unwrap())
                    .sum::<f64>()
                    / perms.len() as f64;
                assert!((mean - exact_random_ausc(n).unwrap()).abs() < 1e-12);
            }
        }
        assert_eq!(exact_random_ausc(20).unwrap(), 0.525);
    }

    #[test]
    fn expected_random_examples() {
        assert_eq!(expected_random_ausc(20).unwrap(), 0.475);
        assert_eq!(expected_random_ausc(1).unwrap(), 0.0);
        assert!((expected_random_ausc(1_000_000).unwrap() - 0.4999995).abs() < 1e-15);
        assert!(expected_random_ausc(0).is_err());
    }

    #[test]
    fn random_rankings_average_the_exact_expectation() {
        let truth = Ranking::identity(20);
        let mut rng = Rng::new(99);
        let mut order: Vec<AgentId> = (0..20).map(AgentId).collect();
        let mut total = 0.0;
        for _ in 0..10_000 {
            order.shuffle(&mut rng);
            total += ausc(&Ranking::new(order.clone()).unwrap(), &truth, 5).unwrap();
        }
        let mean = total / 10_000.0;
        assert!(
            (mean - exact_random_ausc(20).unwrap()).abs() < 0.01,
            "{mean}"
        );
    }

    #[test]
    fn overlap_counts_are_hypergeometric() {
        // |true top-k ∩ random top-m| has mean k*m/K.
        let (k_total, k) = (20, 5);
        let mut rng = Rng::new(5);
        let mut order: Vec<usize> = (0..k_total).collect();
        for m in 1..=k_total {
            let mut sum = 0usize;
            for _ in 0..100_000 {
                order.shuffle(&mut rng);
                sum += order[..m].iter().filter(|&&a| a < k).count();
            }
            let mean = sum as f64 / 100_000.0;
            let expected = (k * m) as f64 / k_total as f64;
            assert!(
                (mean - expected).abs() < 0.02,
                "m={m}: {mean} vs {expected}"
            );
        }
    }

    #[test]
    fn spearman_examples() {
        assert!(
            (spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 3.0]).unwrap() - 0.8).abs() < 1e-12
        );
        let id = Ranking::identity(6);
        assert!((spearman_rankings(&id, &id).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman_rankings(&id, &id.reversed()).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ConstantInput)
        ));
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 10.0, 30.0]),
            vec![1.5, 3.0, 1.5, 4.0]
        );
    }

    #[test]
    fn dcg_identity_is_maximal_exhaustively() {
        fn permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in permutations(n - 1) {
                for i in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(i, n - 1);
                    out.push(q);
                }
            }
            out
        }
        for n in 1..=6 {
            let truth = Ranking::identity(n);
            for k in 1..=n {
                let best = dcg_at_k(&truth, &truth, k, Relevance::KMinusRank).unwrap();
                for p in permutations(n) {
                    let v = dcg_at_k(&ranking(&p), &truth, k, Relevance::KMinusRank).unwrap();
                    assert!(v <= best + 1e-12);
                }
            }
        }
    }

    #[test]
    fn metrics_report_csv() {
        let truth = Ranking::identity(5);
        let r = MetricsReport::compute(&truth, &truth, 2, Relevance::KMinusRank).unwrap();
        let text = r.to_csv_string().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,sensitivity,dcg");
        assert_eq!(lines[1], "1,0.5,4");
        assert_eq!(lines.len(), 7);
        assert!(lines[6].starts_with("ausc,0.9,"));
    }

    fn permutation(n: usize) -> impl Strategy<Value = Ranking> {
        Just((0..n).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(|v| Ranking::new(v.into_iter().map(AgentId).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn report_invariants(
            (pred, truth, top_m) in (2usize..25).prop_flat_map(|n| (permutation(n), permutation(n), 1..=n))
        ) {
            let r = MetricsReport::compute(&pred, &truth, top_m, Relevance::KMinusRank).unwrap();
            prop_assert!(r.sensitivity.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*r.sensitivity.last().unwrap(), 1.0);
            prop_assert!((r.ausc - ausc(&pred, &truth, top_m).unwrap()).abs() < 1e-12);
            let k = pred.len();
            prop_assert!(r.ausc >= min_ausc(k, top_m).unwrap() - 1e-12);
            prop_assert!(r.ausc <= max_ausc(k, top_m).unwrap() + 1e-12);
        }
    }
}
