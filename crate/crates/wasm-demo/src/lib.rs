//! Browser bindings: best-response curves, ε-gaming verdicts and a
//! single-dataset detector comparison.

use wasm_bindgen::prelude::*;

use gamerank::harness::{run_in_memory, Detector, ExperimentConfig};
use gamerank::strategic::{
    epsilon_gaming_verdict, lambda_lower_bound, optimal_response, CostSpec, RewardSpec,
};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn reward(kind: &str) -> Result<RewardSpec, JsError> {
    match kind {
        "linear" => RewardSpec::affine(1.0, 0.0).map_err(js_err),
        "log" => Ok(RewardSpec::Log),
        other => Err(JsError::new(&format!("unknown reward {other:?}"))),
    }
}

/// Reported rate and implied lower bound on λ over a log-spaced λ grid.
/// Returns `[λ_0, Δ_0, bound_0, λ_1, Δ_1, bound_1, ...]`.
#[wasm_bindgen]
pub fn best_response_curve(
    reward_kind: &str,
    d_star: f64,
    lambda_min: f64,
    lambda_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    if !(lambda_min > 0.0 && lambda_max > lambda_min) || points < 2 {
        return Err(JsError::new(
            "need 0 < lambda_min < lambda_max and at least 2 points",
        ));
    }
    let r = reward(reward_kind)?;
    let c = CostSpec::Quadratic;
    let (lo, hi) = (lambda_min.ln(), lambda_max.ln());
    let mut out = Vec::with_capacity(3 * points);
    for i in 0..points {
        let lambda = (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp();
        let delta = optimal_response(&r, &c, lambda, d_star).map_err(js_err)?;
        let bound = if delta > 0.0 {
            lambda_lower_bound(&r, &c, delta).map_err(js_err)?
        } else {
            f64::NAN
        };
        out.extend([lambda, delta, bound]);
    }
    Ok(out)
}

/// ε-gaming check for the linear reward: returns
/// `[λ̂_lo, λ̂_hi, threshold_lo, threshold_hi, verdict]` with verdict
/// 1 = gaming, -1 = not gaming, 0 = inconclusive.
#[wasm_bindgen]
pub fn gaming_verdict(
    epsilon: f64,
    delta_obs: f64,
    d_star_lo: f64,
    d_star_hi: f64,
) -> Result<Vec<f64>, JsError> {
    let g = epsilon_gaming_verdict(
        &reward("linear")?,
        &CostSpec::Quadratic,
        epsilon,
        delta_obs,
        (d_star_lo, d_star_hi),
    )
    .map_err(js_err)?;
    let verdict = match g.verdict {
        gamerank::strategic::GamingVerdict::Gaming => 1.0,
        gamerank::strategic::GamingVerdict::NotGaming => -1.0,
        gamerank::strategic::GamingVerdict::Inconclusive => 0.0,
    };
    Ok(vec![
        g.lambda_hat_lo,
        g.lambda_hat_hi,
        g.threshold_lo,
        g.threshold_hi,
        verdict,
    ])
}

/// Sensitivity curves and AUSC of several detectors on one synthetic dataset.
#[wasm_bindgen]
pub struct Comparison {
    detectors: Vec<String>,
    ausc: Vec<f64>,
    curves: Vec<Vec<f64>>,
}

#[wasm_bindgen]
impl Comparison {
    pub fn detectors(&self) -> Vec<String> {
        self.detectors.clone()
    }

    pub fn ausc(&self) -> Vec<f64> {
        self.ausc.clone()
    }

    /// Top-5 sensitivity at k = 1..K for detector `i`.
    pub fn sensitivity(&self, i: usize) -> Vec<f64> {
        self.curves.get(i).cloned().unwrap_or_default()
    }
}

/// Generates one dataset at `mean_range` and scores payout-only, random,
/// KNN, S-learner and S+IPW rankings against the truth.
#[wasm_bindgen]
pub fn compare_detectors(
    mean_range: f64,
    seed: u32,
    per_agent_count: usize,
) -> Result<Comparison, JsError> {
    let mut cfg = ExperimentConfig::default();
    cfg.mean_range_grid = vec![mean_range];
    cfg.seeds = vec![u64::from(seed)];
    cfg.synth.per_agent_count = per_agent_count;
    cfg.detectors = vec![
        Detector::Payout,
        Detector::Random,
        Detector::Knn,
        Detector::SLearner,
        Detector::SIpw,
    ];
    let table = run_in_memory(&cfg).map_err(js_err)?;
    let mut out = Comparison {
        detectors: Vec::new(),
        ausc: Vec::new(),
        curves: Vec::new(),
    };
    for &d in &cfg.detectors {
        out.detectors.push(d.to_string());
        out.ausc
            .push(table.mean_ausc(mean_range, d).unwrap_or(f64::NAN));
        out.curves.push(
            table
                .curves()
                .iter()
                .filter(|r| r.detector == d)
                .map(|r| r.sensitivity)
                .collect(),
        );
    }
    Ok(out)
}
