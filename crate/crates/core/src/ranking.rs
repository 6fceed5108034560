//! Aggregating a pairwise effect matrix into a total order over agents.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;

use crate::domain::{AgentId, Ranking};
use crate::error::{Error, Result};
use crate::estimators::EffectMatrix;
use crate::io::{fmt_sig, write_atomic};
use crate::rng::Rng;

const ANTISYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AggregationRule {
    /// Mean effect against every other agent.
    #[default]
    BordaMean,
    /// Number of agents with a positive effect against.
    CopelandWins,
}

impl fmt::Display for AggregationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregationRule::BordaMean => "borda_mean",
            AggregationRule::CopelandWins => "copeland_wins",
        })
    }
}

impl FromStr for AggregationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "borda_mean" | "borda" => Ok(AggregationRule::BordaMean),
            "copeland_wins" | "copeland" => Ok(AggregationRule::CopelandWins),
            other => Err(Error::parse(
                "aggregation rule",
                format!("unknown rule {other:?}"),
            )),
        }
    }
}

/// A ranking together with the per-agent scores that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRanking {
    pub ranking: Ranking,
    /// Indexed by agent id.
    pub scores: Vec<f64>,
}

impl ScoredRanking {
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::invalid("cannot rank zero agents"));
        }
        Ok(Self {
            ranking: Ranking::from_scores_desc(&scores),
            scores,
        })
    }

    /// CSV `position,agent_id,score`, positions starting at 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["position", "agent_id", "score"])?;
        for (i, a) in self.ranking.order().iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                a.0.to_string(),
                fmt_sig(self.scores[a.0]),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<ranking>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::parse("ranking", e))
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string()?.as_bytes())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header != ["position", "agent_id", "score"] {
            return Err(Error::parse(
                "ranking",
                format!("unexpected header {header:?}"),
            ));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
            let pos: usize = num(0)
                .parse()
                .map_err(|e| Error::parse("ranking position", e))?;
            let agent: usize = num(1)
                .parse()
                .map_err(|e| Error::parse("ranking agent_id", e))?;
            let score: f64 = num(2)
                .parse()
                .map_err(|e| Error::parse("ranking score", e))?;
            rows.push((pos, agent, score));
        }
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(i, r)| r.0 != i + 1) {
            return Err(Error::parse("ranking", "positions must be 1..=K"));
        }
        let ranking = Ranking::new(rows.iter().map(|r| AgentId(r.1)).collect())?;
        let mut scores = vec![0.0; rows.len()];
        for &(_, a, s) in &rows {
            scores[a] = s;
        }
        Ok(Self { ranking, scores })
    }
}

fn check_antisymmetric(t: &EffectMatrix) -> Result<()> {
    let n = t.len();
    for p in 0..n {
        for q in p..n {
            let (a, b) = (t.get(p, q), t.get(q, p));
            if !a.is_finite() || (a + b).abs() > ANTISYMMETRY_TOL {
                return Err(Error::NotAntisymmetric {
                    row: p,
                    col: q,
                    value: a,
                    mirror: b,
                });
            }
        }
    }
    Ok(())
}

pub fn aggregate_scores(t: &EffectMatrix, rule: AggregationRule) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|p| {
            let row = &t.rows()[p];
            match rule {
                AggregationRule::BordaMean if n > 1 => {
                    row.iter()
                        .enumerate()
                        .filter(|&(q, _)| q != p)
                        .map(|(_, v)| v)
                        .sum::<f64>()
                        / (n - 1) as f64
                }
                AggregationRule::BordaMean => 0.0,
                AggregationRule::CopelandWins => row
                    .iter()
                    .enumerate()
                    .filter(|&(q, &v)| q != p && v > 0.0)
                    .count() as f64,
            }
        })
        .collect()
}

/// Orders agents by aggregated effect, largest first (most gaming-prone).
pub fn rank_from_effects(t: &EffectMatrix, rule: AggregationRule) -> Result<ScoredRanking> {
    if t.is_empty() {
        return Err(Error::invalid("effect matrix is empty"));
    }
    check_antisymmetric(t)?;
    ScoredRanking::from_scores(aggregate_scores(t, rule))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub trials: usize,
    pub unchanged: usize,
    /// Pairs whose effect is within `epsilon` of zero, so noise can flip it.
    pub unstable_pairs: Vec<(AgentId, AgentId)>,
    /// Adjacent pairs of the unperturbed ranking that swapped in some trial.
    pub flipped_adjacent: Vec<(AgentId, AgentId)>,
}

impl StabilityReport {
    pub fn fraction_unchanged(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.unchanged as f64 / self.trials as f64
        }
    }
}

/// Re-ranks after adding independent uniform noise in `(-epsilon, epsilon)`
/// to each pair's effect (mirrored to keep antisymmetry).
pub fn perturbation_stability(
    t: &EffectMatrix,
    rule: AggregationRule,
    epsilon: f64,
    trials: usize,
    rng: &mut Rng,
) -> Result<StabilityReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let base = rank_from_effects(t, rule)?.ranking;
    let n = t.len();
    let mut unstable_pairs = Vec::new();
    for p in 0..n {
        for q in (p + 1)..n {
            if t.get(p, q).abs() <= epsilon {
                unstable_pairs.push((AgentId(p), AgentId(q)));
            }
        }
    }
    let adjacent: Vec<(AgentId, AgentId)> = base.order().windows(2).map(|w| (w[0], w[1])).collect();
    let mut flipped = vec![false; adjacent.len()];
    let mut unchanged = 0;
    for _ in 0..trials {
        let noisy =
            EffectMatrix::from_upper(n, |p, q| t.get(p, q) + rng.random_range(-epsilon..epsilon));
        let ranking = ScoredRanking::from_scores(aggregate_scores(&noisy, rule))?.ranking;
        if ranking == base {
            unchanged += 1;
            continue;
        }
        let pos = ranking.positions();
        for (f, (a, b)) in flipped.iter_mut().zip(&adjacent) {
            if pos[a.0] > pos[b.0] {
                *f = true;
            }
        }
    }
    Ok(StabilityReport {
        trials,
        unchanged,
        unstable_pairs,
        flipped_adjacent: adjacent
            .into_iter()
            .zip(flipped)
            .filter_map(|(pair, f)| f.then_some(pair))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::effect_matrix;
    use crate::rng::Rng;
    use crate::synthgen::{generate_dataset, ground_truth_ranking, SynthConfig};
    use proptest::prelude::*;

    fn ids(v: &[usize]) -> Vec<AgentId> {
        v.iter().map(|&i| AgentId(i)).collect()
    }

    #[test]
    fn cycle_ties_break_by_id() {
        let t = EffectMatrix::from_raw(vec![
            vec![0.0, 1.0, -1.0],
            vec![-1.0, 0.0, 1.0],
            vec![1.0, -1.0, 0.0],
        ])
        .unwrap();
        let r = rank_from_effects(&t, AggregationRule::BordaMean).unwrap();
        assert_eq!(r.scores, vec![0.0, 0.0, 0.0]);
        assert_eq!(r.ranking.order(), ids(&[0, 1, 2]).as_slice());
    }

    #[test]
    fn two_agents() {
        let t = EffectMatrix::from_raw(vec![vec![0.0, 0.03], vec![-0.03, 0.0]]).unwrap();
        for rule in [AggregationRule::BordaMean, AggregationRule::CopelandWins] {
            assert_eq!(
                rank_from_effects(&t, rule).unwrap().ranking.order(),
                ids(&[0, 1]).as_slice()
            );
        }
    }

    #[test]
    fn oracle_matrix_recovers_truth_under_both_rules() {
        let cfg = SynthConfig {
            lambdas: vec![0.05, 0.01, 0.2, 0.002, 0.1],
            per_agent_count: 40,
            ..SynthConfig::default()
        };
        let data = generate_dataset(&cfg, &mut Rng::new(7)).unwrap();
        let t = effect_matrix(data.oracle(), &data.dataset).unwrap();
        let truth = ground_truth_ranking(&cfg);
        assert_eq!(truth.order(), ids(&[3, 1, 0, 4, 2]).as_slice());
        for rule in [AggregationRule::BordaMean, AggregationRule::CopelandWins] {
            assert_eq!(rank_from_effects(&t, rule).unwrap().ranking, truth);
        }
    }

    #[test]
    fn rejects_non_antisymmetric() {
        let t =
            EffectMatrix::from_antisymmetric(vec![vec![0.0, 1.0], vec![-1.0, 0.0]], 0.0).unwrap();
        assert!(rank_from_effects(&t, AggregationRule::BordaMean).is_ok());
        // Values that only pass a loose tolerance are rejected here.
        let loose =
            EffectMatrix::from_antisymmetric(vec![vec![0.0, 1.0], vec![-1.0 + 1e-9, 0.0]], 1e-6)
                .unwrap();
        assert!(matches!(
            rank_from_effects(&loose, AggregationRule::BordaMean),
            Err(Error::NotAntisymmetric { .. })
        ));
    }

    #[test]
    fn stability_flags_small_effects() {
        let t = EffectMatrix::from_fn(4, |p, q| {
            [0.0, 0.1, 0.2, 0.205][q] - [0.0, 0.1, 0.2, 0.205][p]
        });
        let report =
            perturbation_stability(&t, AggregationRule::BordaMean, 0.02, 200, &mut Rng::new(1))
                .unwrap();
        assert_eq!(report.unstable_pairs, vec![(AgentId(2), AgentId(3))]);
        assert!(report.fraction_unchanged() < 1.0);
        assert_eq!(report.flipped_adjacent, vec![(AgentId(2), AgentId(3))]);
    }

    #[test]
    fn stability_with_large_margins() {
        let s = [0.0, 0.1, 0.2, 0.3, 0.4];
        let t = EffectMatrix::from_fn(5, |p, q| s[q] - s[p]);
        let report =
            perturbation_stability(&t, AggregationRule::BordaMean, 0.05, 500, &mut Rng::new(3))
                .unwrap();
        assert!(report.unstable_pairs.is_empty());
        assert_eq!(report.unchanged, 500);
    }

    #[test]
    fn ranking_csv_round_trip() {
        let r = ScoredRanking::from_scores(vec![0.1, 0.5, -0.2]).unwrap();
        let text = r.to_csv_string().unwrap();
        assert_eq!(
            text,
            "position,agent_id,score\n1,1,0.5\n2,0,0.1\n3,2,-0.2\n"
        );
        assert_eq!(ScoredRanking::read_csv(text.as_bytes()).unwrap(), r);
        assert!(
            ScoredRanking::read_csv("position,agent_id,score\n1,0,1\n3,1,0\n".as_bytes()).is_err()
        );
    }

    #[test]
    fn rule_names_round_trip() {
        for r in [AggregationRule::BordaMean, AggregationRule::CopelandWins] {
            assert_eq!(r.to_string().parse::<AggregationRule>().unwrap(), r);
        }
    }

    proptest! {
        #[test]
        fn monotone_scores_are_recovered(
            scores in proptest::collection::hash_set(-1000i32..1000, 2..12),
            scale in 0.001f64..1000.0,
        ) {
            let s: Vec<f64> = scores.into_iter().map(|v| v as f64 / 100.0).collect();
            let expected = Ranking::from_scores_desc(&s);
            let t = EffectMatrix::from_fn(s.len(), |p, q| s[p] - s[q]);
            let scaled = EffectMatrix::from_fn(s.len(), |p, q| scale * (s[p] - s[q]));
            for rule in [AggregationRule::BordaMean, AggregationRule::CopelandWins] {
                prop_assert_eq!(&rank_from_effects(&t, rule).unwrap().ranking, &expected);
                prop_assert_eq!(&rank_from_effects(&scaled, rule).unwrap().ranking, &expected);
            }
            let again = EffectMatrix::from_raw(t.rows().to_vec()).unwrap();
            prop_assert_eq!(again, t);
        }
    }
}
