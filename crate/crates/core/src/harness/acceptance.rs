//! The acceptance suite behind the `verify` command.

use rand::Rng as _;

use super::config::{Detector, ExperimentConfig};
use super::pipeline::{generate_cell, grid_cells, run_in_memory};
use super::report::{experiment_checks, CheckOutcome};
use crate::baselines::random_ranking;
use crate::domain::Ranking;
use crate::error::Result;
use crate::estimators::{effect_matrix, logistic_objective, mlp::param_count, mlp_objective};
use crate::metrics::{ausc, dcg_at_k, spearman, Relevance};
use crate::ranking::{perturbation_stability, rank_from_effects, AggregationRule};
use crate::rng::{stage, Rng};
use crate::strategic::{
    epsilon_gaming_verdict, lambda_lower_bound, optimal_response, CostSpec, GamingVerdict,
    RewardSpec,
};

/// Oracle effects recover the true ordering on every cell of the sweep.
pub fn check_oracle_ranking(config: &ExperimentConfig) -> Result<CheckOutcome> {
    let cells = grid_cells(config);
    let mut failures = Vec::new();
    for &(m, s) in &cells {
        let labeled = generate_cell(config, m, s)?;
        let t = effect_matrix(labeled.oracle(), &labeled.dataset)?;
        let r = rank_from_effects(&t, AggregationRule::BordaMean)?.ranking;
        if r != labeled.truth_order {
            failures.push(format!("mean_range={m} seed={s}"));
        }
    }
    Ok(CheckOutcome::new(
        "A1",
        "oracle effect matrix ranks agents in true order",
        Some(failures.is_empty()),
        format!(
            "{} of {} cells exact{}",
            cells.len() - failures.len(),
            cells.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failed {}", failures.join(", "))
            }
        ),
    ))
}

fn closed_form_pairs() -> Vec<(RewardSpec, CostSpec)> {
    vec![
        (
            RewardSpec::affine(1.0, 0.0).expect("valid affine"),
            CostSpec::Quadratic,
        ),
        (RewardSpec::Log, CostSpec::Quadratic),
    ]
}

pub fn check_best_response(seed: u64) -> Result<CheckOutcome> {
    let mut rng = Rng::new(seed).substream(2, stage::FIT);
    let mut bad = 0;
    let mut interior = 0;
    for (reward, cost) in closed_form_pairs() {
        for _ in 0..1000 {
            let lambda = 10f64.powf(rng.random_range(-1.0..3.0));
            let d_star = rng.random_range(0.0..1.0);
            let r1 = optimal_response(&reward, &cost, lambda, d_star)?;
            let r2 = optimal_response(&reward, &cost, lambda * 1.5, d_star)?;
            if r1 < d_star || r2 < d_star {
                bad += 1;
            }
            if r1 < 1.0 {
                interior += 1;
                if r2 >= r1 {
                    bad += 1;
                }
            }
        }
    }
    Ok(CheckOutcome::new(
        "A2",
        "best response decreasing in lambda and never below ground truth",
        Some(bad == 0),
        format!("{bad} violations over 2000 draws ({interior} interior)"),
    ))
}

pub fn check_lower_bound(seed: u64) -> Result<CheckOutcome> {
    let mut rng = Rng::new(seed).substream(3, stage::FIT);
    let mut bad = 0;
    for (reward, cost) in closed_form_pairs() {
        for _ in 0..1000 {
            let lambda = 10f64.powf(rng.random_range(-0.5..3.0));
            let d_star = rng.random_range(0.0..0.5);
            let delta = optimal_response(&reward, &cost, lambda, d_star)?;
            if delta >= 1.0 || delta <= 0.0 {
                continue;
            }
            if lambda_lower_bound(&reward, &cost, delta)? > lambda + 1e-9 {
                bad += 1;
            }
            let tight = optimal_response(&reward, &cost, lambda, 0.0)?;
            if tight < 1.0
                && (lambda_lower_bound(&reward, &cost, tight)? - lambda).abs()
                    > 1e-6 * lambda.max(1.0)
            {
                bad += 1;
            }
        }
    }
    let affine = RewardSpec::affine(1.0, 0.0)?;
    let q = CostSpec::Quadratic;
    let d1 = optimal_response(&affine, &q, 10.0, 0.05)?;
    let d2 = optimal_response(&affine, &q, 30.0, 0.12)?;
    let b1 = lambda_lower_bound(&affine, &q, d1)?;
    let b2 = lambda_lower_bound(&affine, &q, d2)?;
    let example = (d1 - 0.10).abs() < 0.01
        && (d2 - 0.1367).abs() < 0.01
        && (b1 - 5.0).abs() < 0.01
        && (b2 - 3.66).abs() < 0.01;
    Ok(CheckOutcome::new(
        "A3",
        "deterrence lower bound valid and sharp",
        Some(bad == 0 && example),
        format!(
            "{bad} violations; worked example deltas {d1:.4}, {d2:.4}, bounds {b1:.3}, {b2:.3}"
        ),
    ))
}

pub fn check_random_ausc(seed: u64) -> Result<CheckOutcome> {
    let mut rng = Rng::new(seed).substream(4, stage::RANDOM_RANKING);
    let truth = Ranking::identity(20);
    let n = 10_000;
    let mut total = 0.0;
    for _ in 0..n {
        total += ausc(&random_ranking(20, &mut rng)?, &truth, 5)?;
    }
    let mean = total / n as f64;
    Ok(CheckOutcome::new(
        "A4",
        "mean AUSC of random rankings within 0.475 ± 0.01",
        Some((mean - 0.475).abs() <= 0.01),
        format!("empirical {mean:.4} over {n} rankings; exact expectation (K+1)/(2K) = 0.525"),
    ))
}

pub fn check_stability(config: &ExperimentConfig, seed: u64) -> Result<CheckOutcome> {
    let labeled = generate_cell(config, 1.0, seed)?;
    let t = effect_matrix(labeled.oracle(), &labeled.dataset)?;
    let eps = t.min_abs_offdiag().unwrap_or(0.0) / 2.0;
    let mut rng = Rng::new(seed).substream(5, stage::PERTURB);
    let rep = perturbation_stability(&t, AggregationRule::BordaMean, eps, 1000, &mut rng)?;
    Ok(CheckOutcome::new(
        "A8",
        "oracle ranking unchanged under noise of half the smallest effect",
        Some(rep.unchanged == rep.trials),
        format!(
            "{}/{} unchanged at epsilon {eps:.3e}",
            rep.unchanged, rep.trials
        ),
    ))
}

pub fn check_metric_values() -> Result<CheckOutcome> {
    let truth = Ranking::identity(20);
    let dcg = dcg_at_k(&truth, &truth, 3, Relevance::KMinusRank)?;
    let best = ausc(&truth, &truth, 5)?;
    let worst = ausc(&truth.reversed(), &truth, 5)?;
    let rho = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 3.0])?;
    let ok = (dcg - 38.857).abs() < 1e-3
        && (best - 0.9).abs() < 1e-3
        && (worst - 0.15).abs() < 1e-3
        && (rho - 0.8).abs() < 1e-3;
    Ok(CheckOutcome::new(
        "A9",
        "metric hand values",
        Some(ok),
        format!("dcg {dcg:.3}, best {best:.3}, worst {worst:.3}, spearman {rho:.3}"),
    ))
}

fn worst_relative_error(params: &[f64], f: impl Fn(&[f64]) -> (f64, Vec<f64>)) -> f64 {
    let (_, grad) = f(params);
    let mut worst: f64 = 0.0;
    let mut p = params.to_vec();
    for j in 0..params.len() {
        let h = 1e-5 * params[j].abs().max(1.0);
        p[j] = params[j] + h;
        let up = f(&p).0;
        p[j] = params[j] - h;
        let down = f(&p).0;
        p[j] = params[j];
        let fd = (up - down) / (2.0 * h);
        let err = (fd - grad[j]).abs() / fd.abs().max(grad[j].abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}

pub fn check_gradients(seed: u64) -> Result<CheckOutcome> {
    let mut rng = Rng::new(seed).substream(10, stage::FIT);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(5..20);
        let dim = rng.random_range(1..4);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let l2 = rng.random_range(0.0..0.1);

        let params: Vec<f64> = (0..=dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst = worst.max(worst_relative_error(&params, |p| {
            logistic_objective(p, &x, &y, Some(&w), l2)
        }));

        let sizes = vec![dim, rng.random_range(2..5), 1];
        let params: Vec<f64> = (0..param_count(&sizes))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        worst = worst.max(worst_relative_error(&params, |p| {
            mlp_objective(p, &sizes, &x, &y, Some(&w), l2)
        }));
    }
    Ok(CheckOutcome::new(
        "A10",
        "analytic gradients match central differences",
        Some(worst < 1e-4),
        format!("worst relative error {worst:.2e} over 50 instances"),
    ))
}

pub fn check_gaming_verdicts() -> Result<CheckOutcome> {
    let r = RewardSpec::affine(1.0, 0.0)?;
    let c = CostSpec::Quadratic;
    let a = epsilon_gaming_verdict(&r, &c, 0.02, 0.10, (0.02, 0.06))?;
    let b = epsilon_gaming_verdict(&r, &c, 0.02, 0.10, (0.085, 0.095))?;
    Ok(CheckOutcome::new(
        "A11",
        "epsilon-gaming verdicts",
        Some(a.verdict == GamingVerdict::Gaming && b.verdict == GamingVerdict::NotGaming),
        format!(
            "[{:.2}, {:.2}] vs {:.0}: {:?}; [{:.1}, {:.1}] vs {:.0}: {:?}",
            a.lambda_hat_lo,
            a.lambda_hat_hi,
            a.threshold_lo,
            a.verdict,
            b.lambda_hat_lo,
            b.lambda_hat_hi,
            b.threshold_lo,
            b.verdict
        ),
    ))
}

/// Runs A1 through A11. The sweep-based checks use `config`'s population,
/// seeds and estimator settings at mean ranges 0.0 and 1.0.
pub fn run_acceptance(config: &ExperimentConfig) -> Result<Vec<CheckOutcome>> {
    let seed = config.seeds[0];
    let mut out = vec![
        check_oracle_ranking(config)?,
        check_best_response(seed)?,
        check_lower_bound(seed)?,
        check_random_ausc(seed)?,
    ];
    let mut sweep = config.clone();
    sweep.mean_range_grid = vec![0.0, 1.0];
    sweep.detectors = vec![
        Detector::Payout,
        Detector::Random,
        Detector::SLearner,
        Detector::SIpw,
    ];
    let table = run_in_memory(&sweep)?;
    let k_total = config.synth.lambdas.len();
    out.extend(
        experiment_checks(&table, k_total)?
            .into_iter()
            .filter(|c| matches!(c.id.as_str(), "A5" | "A6" | "A7")),
    );
    out.push(check_stability(config, seed)?);
    out.push(check_metric_values()?);
    out.push(check_gradients(seed)?);
    out.push(check_gaming_verdicts()?);
    Ok(out)
}
