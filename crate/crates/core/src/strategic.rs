//! Reward/cost algebra and the agent's best response.
//!
//! An agent with deterrence `lambda` facing ground-truth rate `d_star` reports
//! the rate that maximizes `R(d) - lambda * c(d - d_star)` over `[0, 1]`. With
//! an increasing concave reward and a strictly convex cost that is flat at the
//! origin, the maximizer is unique, never below `d_star`, and strictly
//! decreasing in `lambda` while interior.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::optimize::golden_section_max;

/// Lower edge of the search interval for the log reward.
const LOG_FLOOR: f64 = 1e-12;
const SOLVER_TOL: f64 = 1e-9;
const SOLVER_MAX_ITER: usize = 200;
const CONCAVITY_GRID: usize = 65;

/// A user-supplied scalar function together with its declared derivative.
#[derive(Clone)]
pub struct CustomFn {
    pub name: String,
    pub value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomFn {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomFn({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum RewardSpec {
    /// `R(x) = a x + b`, `a > 0`.
    Affine {
        a: f64,
        b: f64,
    },
    /// `R(x) = ln x`.
    Log,
    Custom(CustomFn),
}

impl RewardSpec {
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::invalid(format!(
                "affine reward needs a finite slope a > 0, got a={a}, b={b}"
            )));
        }
        Ok(RewardSpec::Affine { a, b })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            RewardSpec::Affine { a, b } => a * x + b,
            RewardSpec::Log => x.ln(),
            RewardSpec::Custom(f) => (f.value)(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            RewardSpec::Affine { a, .. } => *a,
            RewardSpec::Log => 1.0 / x,
            RewardSpec::Custom(f) => (f.derivative)(x),
        }
    }
}

impl fmt::Display for RewardSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardSpec::Affine { a, b } => write!(f, "affine:{a},{b}"),
            RewardSpec::Log => write!(f, "log"),
            RewardSpec::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

impl FromStr for RewardSpec {
    type Err = Error;

    /// Accepts `log`, `affine` (a=1, b=0) and `affine:a,b`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "log" => Ok(RewardSpec::Log),
            "affine" => RewardSpec::affine(1.0, 0.0),
            _ => {
                let params = s
                    .strip_prefix("affine:")
                    .ok_or_else(|| Error::parse("reward", format!("unknown reward {s:?}")))?;
                let (a, b) = params
                    .split_once(',')
                    .ok_or_else(|| Error::parse("reward", "expected affine:a,b"))?;
                let a = a
                    .trim()
                    .parse()
                    .map_err(|e| Error::parse("reward slope", e))?;
                let b = b
                    .trim()
                    .parse()
                    .map_err(|e| Error::parse("reward offset", e))?;
                RewardSpec::affine(a, b)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum CostSpec {
    /// `c(x) = x^2`.
    Quadratic,
    Custom(CustomFn),
}

impl CostSpec {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            CostSpec::Quadratic => x * x,
            CostSpec::Custom(f) => (f.value)(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            CostSpec::Quadratic => 2.0 * x,
            CostSpec::Custom(f) => (f.derivative)(x),
        }
    }
}

impl fmt::Display for CostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostSpec::Quadratic => write!(f, "quadratic"),
            CostSpec::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

impl FromStr for CostSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "quadratic" => Ok(CostSpec::Quadratic),
            other => Err(Error::parse("cost", format!("unknown cost {other:?}"))),
        }
    }
}

fn validate_response_inputs(lambda: f64, d_star: f64) -> Result<()> {
    if !(lambda > 0.0) || lambda.is_nan() {
        return Err(Error::invalid(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(0.0..=1.0).contains(&d_star) {
        return Err(Error::invalid(format!(
            "d_star must lie in [0, 1], got {d_star}"
        )));
    }
    Ok(())
}

/// The utility-maximizing reported rate for one agent.
///
/// Uses the closed form for affine/quadratic and log/quadratic, and a
/// golden-section search on `[d_star, 1]` otherwise.
pub fn optimal_response(
    reward: &RewardSpec,
    cost: &CostSpec,
    lambda: f64,
    d_star: f64,
) -> Result<f64> {
    validate_response_inputs(lambda, d_star)?;
    match (reward, cost) {
        (RewardSpec::Affine { a, .. }, CostSpec::Quadratic) => {
            Ok((d_star + a / (2.0 * lambda)).clamp(0.0, 1.0))
        }
        // positive root of 2λd² − 2λd*d − 1 = 0
        (RewardSpec::Log, CostSpec::Quadratic) => {
            let root = 0.5 * (d_star + (d_star * d_star + 2.0 / lambda).sqrt());
            Ok(root.min(1.0))
        }
        _ => optimal_response_numeric(reward, cost, lambda, d_star),
    }
}

/// Golden-section best response, regardless of whether a closed form exists.
pub fn optimal_response_numeric(
    reward: &RewardSpec,
    cost: &CostSpec,
    lambda: f64,
    d_star: f64,
) -> Result<f64> {
    validate_response_inputs(lambda, d_star)?;
    let objective = |d: f64| reward.value(d) - lambda * cost.value(d - d_star);
    let mut lo = match reward {
        RewardSpec::Log => d_star.max(LOG_FLOOR),
        _ => d_star,
    };
    // custom rewards with a pole at zero get the same floor as the log reward
    if !objective(lo).is_finite() {
        lo = lo.max(LOG_FLOOR);
    }
    let hi = 1.0;

    let has_custom = matches!(reward, RewardSpec::Custom(_)) || matches!(cost, CostSpec::Custom(_));
    if has_custom && hi > lo {
        ensure_concave(&objective, lo, hi)?;
    }
    Ok(golden_section_max(objective, lo, hi, SOLVER_TOL, SOLVER_MAX_ITER).x)
}

fn ensure_concave(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<()> {
    let h = (hi - lo) / (CONCAVITY_GRID - 1) as f64;
    let vals: Vec<f64> = (0..CONCAVITY_GRID).map(|i| f(lo + i as f64 * h)).collect();
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for w in vals.windows(3) {
        let second = w[0] - 2.0 * w[1] + w[2];
        if !second.is_finite() || second > 1e-9 * scale {
            return Err(Error::NonConcave { lo, hi });
        }
    }
    Ok(())
}

/// Sharp lower bound `R'(Δ) / c'(Δ)` on the deterrence parameter given only the
/// observed rate `Δ`; attained when the ground truth is zero.
pub fn lambda_lower_bound(reward: &RewardSpec, cost: &CostSpec, delta_obs: f64) -> Result<f64> {
    if !(delta_obs > 0.0 && delta_obs <= 1.0) {
        return Err(Error::invalid(format!(
            "observed rate must lie in (0, 1], got {delta_obs}"
        )));
    }
    let slope = cost.derivative(delta_obs);
    if !(slope > 0.0) {
        return Err(Error::NonPositiveCostSlope(delta_obs));
    }
    Ok(reward.derivative(delta_obs) / slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GamingVerdict {
    Gaming,
    NotGaming,
    Inconclusive,
}

/// Implied deterrence interval and the ε-gaming threshold interval, both in
/// ascending order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GamingInterval {
    pub lambda_hat_lo: f64,
    pub lambda_hat_hi: f64,
    pub threshold_lo: f64,
    pub threshold_hi: f64,
    pub verdict: GamingVerdict,
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Decides whether an agent manipulates its rate by more than `epsilon`,
/// given bounds `[lo, hi]` on its ground-truth rate and its observed rate.
pub fn epsilon_gaming_verdict(
    reward: &RewardSpec,
    cost: &CostSpec,
    epsilon: f64,
    delta_obs: f64,
    d_star_bounds: (f64, f64),
) -> Result<GamingInterval> {
    let (lo, hi) = d_star_bounds;
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(delta_obs > 0.0 && delta_obs <= 1.0) {
        return Err(Error::invalid(format!(
            "observed rate must lie in (0, 1], got {delta_obs}"
        )));
    }
    if !(0.0 <= lo && lo <= hi) {
        return Err(Error::invalid(format!(
            "bad ground-truth bounds [{lo}, {hi}]"
        )));
    }
    if hi >= delta_obs {
        return Err(Error::NonPositiveCostSlope(delta_obs - hi));
    }

    let marginal = reward.derivative(delta_obs);
    let implied = |d: f64| -> Result<f64> {
        let slope = cost.derivative(delta_obs - d);
        if !(slope > 0.0) {
            return Err(Error::NonPositiveCostSlope(delta_obs - d));
        }
        Ok(marginal / slope)
    };
    let (lambda_hat_lo, lambda_hat_hi) = ordered(implied(lo)?, implied(hi)?);

    let eps_slope = cost.derivative(epsilon);
    if !(eps_slope > 0.0) {
        return Err(Error::NonPositiveCostSlope(epsilon));
    }
    let (threshold_lo, threshold_hi) = ordered(
        reward.derivative(epsilon + hi) / eps_slope,
        reward.derivative(epsilon + lo) / eps_slope,
    );

    let verdict = if lambda_hat_hi < threshold_lo {
        GamingVerdict::Gaming
    } else if lambda_hat_lo > threshold_hi {
        GamingVerdict::NotGaming
    } else {
        GamingVerdict::Inconclusive
    };
    Ok(GamingInterval {
        lambda_hat_lo,
        lambda_hat_hi,
        threshold_lo,
        threshold_hi,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssumptionKind {
    RewardNotIncreasing,
    RewardNotConcave,
    CostNotStrictlyConvex,
    CostNonzeroAtOrigin,
    CostSlopeNonzeroAtOrigin,
    DerivativeMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: AssumptionKind,
    pub at: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssumptionReport {
    pub violations: Vec<Violation>,
}

impl AssumptionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: AssumptionKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Grid check of the reward/cost shape requirements. Rewards are probed on
/// `(0, 1]`, costs on `[-1, 1]`.
pub fn check_assumptions(
    reward: &RewardSpec,
    cost: &CostSpec,
    grid_size: usize,
) -> Result<AssumptionReport> {
    if grid_size < 3 {
        return Err(Error::invalid("grid_size must be at least 3"));
    }
    let mut report = AssumptionReport::default();
    let mut flag = |kind, at| report.violations.push(Violation { kind, at });
    let fd_step = 1e-6;

    let n = grid_size;
    let rx: Vec<f64> = (0..n)
        .map(|i| (i as f64 / (n - 1) as f64).max(LOG_FLOOR.sqrt()))
        .collect();
    let rv: Vec<f64> = rx.iter().map(|&x| reward.value(x)).collect();
    for i in 1..n {
        if !(rv[i] > rv[i - 1]) {
            flag(AssumptionKind::RewardNotIncreasing, rx[i]);
        }
    }
    for i in 1..n - 1 {
        let (h0, h1) = (rx[i] - rx[i - 1], rx[i + 1] - rx[i]);
        let slope_left = (rv[i] - rv[i - 1]) / h0;
        let slope_right = (rv[i + 1] - rv[i]) / h1;
        if slope_right > slope_left + 1e-9 * (1.0 + slope_left.abs()) {
            flag(AssumptionKind::RewardNotConcave, rx[i]);
        }
    }

    let cx: Vec<f64> = (0..n)
        .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
        .collect();
    let cv: Vec<f64> = cx.iter().map(|&x| cost.value(x)).collect();
    for i in 1..n - 1 {
        if !(cv[i - 1] - 2.0 * cv[i] + cv[i + 1] > 0.0) {
            flag(AssumptionKind::CostNotStrictlyConvex, cx[i]);
        }
    }
    if cost.value(0.0).abs() > 1e-12 {
        flag(AssumptionKind::CostNonzeroAtOrigin, 0.0);
    }
    let forward = (cost.value(fd_step) - cost.value(0.0)) / fd_step;
    let backward = (cost.value(0.0) - cost.value(-fd_step)) / fd_step;
    if forward.abs() > 1e-4 || backward.abs() > 1e-4 {
        flag(AssumptionKind::CostSlopeNonzeroAtOrigin, 0.0);
    }

    if let RewardSpec::Custom(_) = reward {
        for &x in rx.iter().filter(|&&x| x > fd_step && x < 1.0 - fd_step) {
            let fd = (reward.value(x + fd_step) - reward.value(x - fd_step)) / (2.0 * fd_step);
            if (fd - reward.derivative(x)).abs() > 1e-4 * (1.0 + fd.abs()) {
                flag(AssumptionKind::DerivativeMismatch, x);
            }
        }
    }
    if let CostSpec::Custom(_) = cost {
        for &x in &cx {
            let fd = (cost.value(x + fd_step) - cost.value(x - fd_step)) / (2.0 * fd_step);
            if (fd - cost.derivative(x)).abs() > 1e-4 * (1.0 + fd.abs()) {
                flag(AssumptionKind::DerivativeMismatch, x);
            }
        }
    }
    Ok(report)
}
