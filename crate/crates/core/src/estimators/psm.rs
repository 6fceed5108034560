//! One-to-one propensity score matching between pairs of agents.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::propensity::PropensityModel;
use super::EffectMatrix;
use crate::domain::{AgentId, Dataset, ObservationRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PsmDiagnostics {
    pub matches: usize,
    pub dropped_p: usize,
    pub dropped_p2: usize,
    pub mean_distance: f64,
    /// Total score distance of the greedy matching.
    pub greedy_cost: f64,
    /// Minimum total distance over all maximum-cardinality matchings.
    pub optimal_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsmOutcome {
    pub ate: f64,
    pub diagnostics: PsmDiagnostics,
}

/// Matches rows of `p` and `p2` on the propensity of `p`, pairing closest
/// scores first, and returns the difference in mean decisions.
pub fn psm_ate(
    propensity: &PropensityModel,
    test: &Dataset,
    p: AgentId,
    p2: AgentId,
) -> Result<PsmOutcome> {
    psm_ate_with_outcome(propensity, test, p, p2, ObservationRecord::d_f64)
}

/// [`psm_ate`] with the observed decision replaced by `outcome(record)`, for
/// example an oracle's expected decision.
pub fn psm_ate_with_outcome(
    propensity: &PropensityModel,
    test: &Dataset,
    p: AgentId,
    p2: AgentId,
    outcome: impl Fn(&ObservationRecord) -> f64,
) -> Result<PsmOutcome> {
    for a in [p, p2] {
        if a.0 >= test.num_agents() || a.0 >= propensity.num_agents() {
            return Err(Error::UnknownAgent(a.0));
        }
    }
    let mut left = Vec::new();
    let mut right = Vec::new();
    for r in test.records() {
        if r.agent == p {
            left.push((propensity.prob(&r.x, p)?, outcome(r)));
        } else if r.agent == p2 {
            right.push((propensity.prob(&r.x, p)?, outcome(r)));
        }
    }
    if p == p2 {
        right = left.clone();
    }
    if left.is_empty() || right.is_empty() {
        return Err(Error::NoMatches(p.0, p2.0));
    }

    let ls: Vec<f64> = left.iter().map(|v| v.0).collect();
    let rs: Vec<f64> = right.iter().map(|v| v.0).collect();
    let pairs = greedy_matching(&ls, &rs);
    let matches = pairs.len();
    let (mut cost, mut sum_l, mut sum_r) = (0.0, 0.0, 0.0);
    for &(i, j) in &pairs {
        cost += (ls[i] - rs[j]).abs();
        sum_l += left[i].1;
        sum_r += right[j].1;
    }
    Ok(PsmOutcome {
        ate: sum_l / matches as f64 - sum_r / matches as f64,
        diagnostics: PsmDiagnostics {
            matches,
            dropped_p: left.len() - matches,
            dropped_p2: right.len() - matches,
            mean_distance: cost / matches as f64,
            greedy_cost: cost,
            optimal_cost: optimal_matching_cost(&ls, &rs),
        },
    })
}

#[derive(PartialEq)]
struct Candidate {
    dist: f64,
    a: usize,
    b: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap.
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.a.cmp(&self.a))
            .then(other.b.cmp(&self.b))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Repeatedly matches the closest unmatched pair across the two sets until
/// the smaller set is exhausted; returns `(left index, right index)` pairs.
///
/// On the line the closest remaining cross pair is always adjacent in sorted
/// order among the remaining points, so only adjacent pairs are queued.
pub fn greedy_matching(left: &[f64], right: &[f64]) -> Vec<(usize, usize)> {
    // (score, side, index) with side 0 = left.
    let mut pts: Vec<(f64, u8, usize)> = left
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, 0, i))
        .chain(right.iter().enumerate().map(|(j, &v)| (v, 1, j)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let n = pts.len();
    let mut prev: Vec<Option<usize>> = (0..n).map(|k| k.checked_sub(1)).collect();
    let mut next: Vec<Option<usize>> = (0..n).map(|k| (k + 1 < n).then_some(k + 1)).collect();
    let mut alive = vec![true; n];
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Candidate>, a: usize, b: usize| {
        if pts[a].1 != pts[b].1 {
            heap.push(Candidate {
                dist: (pts[a].0 - pts[b].0).abs(),
                a,
                b,
            });
        }
    };
    for k in 1..n {
        push(&mut heap, k - 1, k);
    }
    let target = left.len().min(right.len());
    let mut out = Vec::with_capacity(target);
    while out.len() < target {
        let Some(Candidate { a, b, .. }) = heap.pop() else {
            break;
        };
        if !alive[a] || !alive[b] || next[a] != Some(b) {
            continue;
        }
        alive[a] = false;
        alive[b] = false;
        let (l, r) = if pts[a].1 == 0 { (a, b) } else { (b, a) };
        out.push((pts[l].2, pts[r].2));
        let (before, after) = (prev[a], next[b]);
        if let Some(x) = before {
            next[x] = after;
        }
        if let Some(y) = after {
            prev[y] = before;
        }
        if let (Some(x), Some(y)) = (before, after) {
            push(&mut heap, x, y);
        }
    }
    out
}

/// Minimum total `|a - b|` over matchings that pair every element of the
/// smaller set. On the line an optimal matching preserves order, so a
/// dynamic program over the sorted values suffices.
pub fn optimal_matching_cost(a: &[f64], b: &[f64]) -> f64 {
    let (mut small, mut large) = if a.len() <= b.len() {
        (a.to_vec(), b.to_vec())
    } else {
        (b.to_vec(), a.to_vec())
    };
    small.sort_by(f64::total_cmp);
    large.sort_by(f64::total_cmp);
    let (m, n) = (small.len(), large.len());
    if m == 0 {
        return 0.0;
    }
    // prev[j]: best cost matching small[..i] into large[..j].
    let mut prev = vec![0.0; n + 1];
    let mut cur = vec![f64::INFINITY; n + 1];
    for i in 1..=m {
        cur[..i].fill(f64::INFINITY);
        for j in i..=n {
            let take = prev[j - 1] + (small[i - 1] - large[j - 1]).abs();
            cur[j] = if j > i { take.min(cur[j - 1]) } else { take };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}

/// Aggregate diagnostics over every agent pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PsmSummary {
    pub pairs: usize,
    pub mean_matches: f64,
    pub mean_distance: f64,
    pub greedy_cost: f64,
    pub optimal_cost: f64,
}

/// Runs `psm_ate` on every pair `p < q` and mirrors the results.
pub fn psm_effect_matrix(
    propensity: &PropensityModel,
    test: &Dataset,
) -> Result<(EffectMatrix, PsmSummary)> {
    let n = test.num_agents();
    let mut upper = vec![vec![0.0; n]; n];
    let mut summary = PsmSummary {
        pairs: 0,
        mean_matches: 0.0,
        mean_distance: 0.0,
        greedy_cost: 0.0,
        optimal_cost: 0.0,
    };
    for p in 0..n {
        for q in (p + 1)..n {
            let out = psm_ate(propensity, test, AgentId(p), AgentId(q))?;
            upper[p][q] = out.ate;
            summary.pairs += 1;
            summary.mean_matches += out.diagnostics.matches as f64;
            summary.mean_distance += out.diagnostics.mean_distance;
            summary.greedy_cost += out.diagnostics.greedy_cost;
            summary.optimal_cost += out.diagnostics.optimal_cost;
        }
    }
    if summary.pairs > 0 {
        summary.mean_matches /= summary.pairs as f64;
        summary.mean_distance /= summary.pairs as f64;
    }
    Ok((EffectMatrix::from_upper(n, |p, q| upper[p][q]), summary))
}
