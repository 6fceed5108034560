//! Synthetic agent populations with known deterrence parameters.
//!
//! Each agent draws covariates from its own Gaussian whose mean is an affine
//! function of `log(lambda)`; `mean_range` controls how strongly agent identity
//! is confounded with the covariates. Ground-truth decisions follow a shared
//! logistic model, and each agent reports its best response to the ground truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::{AgentId, AgentSpec, Dataset, HiddenTruth, ObservationRecord, Ranking};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::strategic::{optimal_response, CostSpec, RewardSpec};

/// Deterrence parameters of the reference population, most gaming-prone first.
pub const DEFAULT_LAMBDAS: [f64; 20] = [
    0.001, 0.003, 0.005, 0.007, 0.009, 0.01, 0.015, 0.02, 0.025, 0.03, 0.035, 0.04, 0.045, 0.05,
    0.06, 0.07, 0.08, 0.09, 0.1, 0.2,
];

/// Multiplier applied to the listed deterrence values inside the agent's
/// utility. With the listed values alone every best response saturates at 1.
pub const DEFAULT_LAMBDA_SCALE: f64 = 1.0e6;

/// How the agent's best response sees the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GamingMode {
    /// Respond to the realized binary ground-truth decision of each record.
    Binary,
    /// Respond to the record's ground-truth probability.
    Rate,
}

impl FromStr for GamingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "binary" => Ok(GamingMode::Binary),
            "rate" => Ok(GamingMode::Rate),
            other => Err(Error::parse(
                "gaming mode",
                format!("unknown mode {other:?}"),
            )),
        }
    }
}

impl std::fmt::Display for GamingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GamingMode::Binary => "binary",
            GamingMode::Rate => "rate",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub lambdas: Vec<f64>,
    pub lambda_scale: f64,
    pub per_agent_count: usize,
    pub mean_range: f64,
    pub mean_offset: f64,
    pub sigma2: f64,
    pub covariate_dim: usize,
    pub target_base_rate: f64,
    pub reward: RewardSpec,
    pub cost: CostSpec,
    pub mode: GamingMode,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            lambda_scale: DEFAULT_LAMBDA_SCALE,
            per_agent_count: 500,
            mean_range: 1.0,
            mean_offset: -1.0,
            sigma2: 1.0,
            covariate_dim: 2,
            target_base_rate: 0.05,
            reward: RewardSpec::Log,
            cost: CostSpec::Quadratic,
            mode: GamingMode::Binary,
        }
    }
}

impl SynthConfig {
    pub fn with_mean_range(mut self, mean_range: f64) -> Self {
        self.mean_range = mean_range;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::invalid("lambdas must be non-empty"));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::invalid(format!("lambdas must be positive, got {l}")));
        }
        if !(self.lambda_scale > 0.0 && self.lambda_scale.is_finite()) {
            return Err(Error::invalid("lambda_scale must be positive"));
        }
        if self.per_agent_count == 0 {
            return Err(Error::invalid("per_agent_count must be positive"));
        }
        if !(self.mean_range >= 0.0 && self.mean_range.is_finite()) {
            return Err(Error::invalid("mean_range must be non-negative"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("sigma2 must be positive"));
        }
        if self.covariate_dim == 0 {
            return Err(Error::invalid("covariate_dim must be positive"));
        }
        if !(self.target_base_rate > 0.0 && self.target_base_rate < 1.0) {
            return Err(Error::invalid("target_base_rate must lie in (0, 1)"));
        }
        agent_means(
            &self.lambdas,
            self.mean_range,
            self.mean_offset,
            self.covariate_dim,
        )?;
        Ok(())
    }

    /// Agents with the deterrence actually used in the utility (listed value
    /// times `lambda_scale`).
    pub fn agents(&self) -> Result<Vec<AgentSpec>> {
        self.lambdas
            .iter()
            .enumerate()
            .map(|(i, &l)| AgentSpec::new(i, l * self.lambda_scale))
            .collect()
    }
}

/// Per-agent covariate means: min-max scaled `log(lambda)` times `mean_range`
/// plus `mean_offset`, broadcast to every coordinate.
pub fn agent_means(
    lambdas: &[f64],
    mean_range: f64,
    mean_offset: f64,
    dim: usize,
) -> Result<Vec<Vec<f64>>> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambdas must be non-empty"));
    }
    let logs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let min = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span == 0.0 && mean_range > 0.0 {
        return Err(Error::invalid(
            "all lambdas are equal, so mean_range must be 0",
        ));
    }
    Ok(logs
        .iter()
        .map(|&l| {
            let scaled = if span == 0.0 { 0.0 } else { (l - min) / span };
            vec![mean_range * scaled + mean_offset; dim]
        })
        .collect())
}

/// Agents sorted by ascending deterrence, ties by id.
pub fn ground_truth_ranking(config: &SynthConfig) -> Ranking {
    Ranking::from_keys_asc(&config.lambdas)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// The generator's true decision probabilities, usable as an oracle outcome
/// model.
#[derive(Debug, Clone)]
pub struct GamingOracle {
    weights: Vec<f64>,
    offset: f64,
    mode: GamingMode,
    reward: RewardSpec,
    cost: CostSpec,
    lambdas: Vec<f64>,
    /// `(Δ_p(0), Δ_p(1))` per agent.
    binary_responses: Vec<(f64, f64)>,
}

impl GamingOracle {
    fn new(config: &SynthConfig, weights: Vec<f64>, offset: f64) -> Result<Self> {
        let lambdas: Vec<f64> = config.agents()?.iter().map(|a| a.lambda).collect();
        let binary_responses = lambdas
            .iter()
            .map(|&l| {
                Ok((
                    optimal_response(&config.reward, &config.cost, l, 0.0)?,
                    optimal_response(&config.reward, &config.cost, l, 1.0)?,
                ))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            weights,
            offset,
            mode: config.mode,
            reward: config.reward.clone(),
            cost: config.cost.clone(),
            lambdas,
            binary_responses,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.lambdas.len()
    }

    pub fn alpha_star(&self, x: &[f64]) -> f64 {
        let z: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum();
        sigmoid(z + self.offset)
    }

    /// Response of `agent` to a given ground truth (binary `0.0`/`1.0` or a rate).
    pub fn response(&self, agent: AgentId, truth: f64) -> Result<f64> {
        let lambda = *self
            .lambdas
            .get(agent.0)
            .ok_or(Error::UnknownAgent(agent.0))?;
        match (self.mode, truth) {
            (GamingMode::Binary, t) if t == 0.0 => Ok(self.binary_responses[agent.0].0),
            (GamingMode::Binary, t) if t == 1.0 => Ok(self.binary_responses[agent.0].1),
            _ => optimal_response(&self.reward, &self.cost, lambda, truth),
        }
    }

    /// `P(d = 1 | x, agent)`, marginal over the ground-truth draw.
    pub fn rate(&self, x: &[f64], agent: AgentId) -> Result<f64> {
        let a = self.alpha_star(x);
        match self.mode {
            GamingMode::Binary => {
                let (r0, r1) = *self
                    .binary_responses
                    .get(agent.0)
                    .ok_or(Error::UnknownAgent(agent.0))?;
                Ok(a * r1 + (1.0 - a) * r0)
            }
            GamingMode::Rate => self.response(agent, a),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub dataset: Dataset,
    pub truth_order: Ranking,
    pub weights_w: Vec<f64>,
    pub offset_b_d: f64,
    pub config: SynthConfig,
    pub seed: u64,
    oracle: GamingOracle,
}

impl LabeledDataset {
    pub fn oracle(&self) -> &GamingOracle {
        &self.oracle
    }

    /// Key-value sidecar describing how the dataset was produced.
    pub fn metadata_string(&self) -> String {
        let c = &self.config;
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        let _ = writeln!(s, "format = gamerank-synth-1");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "lambdas = {}", list(&c.lambdas));
        let _ = writeln!(s, "lambda_scale = {}", c.lambda_scale);
        let _ = writeln!(s, "per_agent_count = {}", c.per_agent_count);
        let _ = writeln!(s, "mean_range = {}", c.mean_range);
        let _ = writeln!(s, "mean_offset = {}", c.mean_offset);
        let _ = writeln!(s, "sigma2 = {}", c.sigma2);
        let _ = writeln!(s, "covariate_dim = {}", c.covariate_dim);
        let _ = writeln!(s, "target_base_rate = {}", c.target_base_rate);
        let _ = writeln!(s, "reward = {}", c.reward);
        let _ = writeln!(s, "cost = {}", c.cost);
        let _ = writeln!(s, "mode = {}", c.mode);
        let _ = writeln!(s, "w = {}", list(&self.weights_w));
        let _ = writeln!(s, "b_d = {}", self.offset_b_d);
        s
    }
}

/// Parsed dataset sidecar.
#[derive(Debug, Clone)]
pub struct SynthMetadata {
    pub seed: u64,
    pub config: SynthConfig,
    pub weights_w: Vec<f64>,
    pub offset_b_d: f64,
}

impl SynthMetadata {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::parse("metadata", format!("expected key = value: {line:?}"))
            })?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| -> Result<&str> {
            kv.get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::parse("metadata", format!("missing key {k}")))
        };
        fn num<T: FromStr>(k: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>()
                .map_err(|e| Error::parse(format!("metadata {k}"), e))
        }
        let list = |k: &str| -> Result<Vec<f64>> {
            get(k)?
                .split(',')
                .map(|v| num::<f64>(k, v.trim()))
                .collect()
        };
        if get("format")? != "gamerank-synth-1" {
            return Err(Error::parse("metadata", "unsupported format"));
        }
        let config = SynthConfig {
            lambdas: list("lambdas")?,
            lambda_scale: num("lambda_scale", get("lambda_scale")?)?,
            per_agent_count: num("per_agent_count", get("per_agent_count")?)?,
            mean_range: num("mean_range", get("mean_range")?)?,
            mean_offset: num("mean_offset", get("mean_offset")?)?,
            sigma2: num("sigma2", get("sigma2")?)?,
            covariate_dim: num("covariate_dim", get("covariate_dim")?)?,
            target_base_rate: num("target_base_rate", get("target_base_rate")?)?,
            reward: get("reward")?.parse()?,
            cost: get("cost")?.parse()?,
            mode: get("mode")?.parse()?,
        };
        config.validate()?;
        Ok(Self {
            seed: num("seed", get("seed")?)?,
            weights_w: list("w")?,
            offset_b_d: num("b_d", get("b_d")?)?,
            config,
        })
    }

    pub fn oracle(&self) -> Result<GamingOracle> {
        GamingOracle::new(&self.config, self.weights_w.clone(), self.offset_b_d)
    }
}

/// Draws a full synthetic dataset. Random draws happen in a fixed order:
/// outcome weights, covariates agent by agent, ground-truth decisions, then
/// reported decisions.
pub fn generate_dataset(config: &SynthConfig, rng: &mut Rng) -> Result<LabeledDataset> {
    config.validate()?;
    let agents = config.agents()?;
    let dim = config.covariate_dim;
    let means = agent_means(&config.lambdas, config.mean_range, config.mean_offset, dim)?;
    let sd = config.sigma2.sqrt();

    let weights: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();

    let n = agents.len() * config.per_agent_count;
    let mut xs = Vec::with_capacity(n);
    let mut owners = Vec::with_capacity(n);
    for (p, mu) in means.iter().enumerate() {
        for _ in 0..config.per_agent_count {
            let x: Vec<f64> = mu
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + sd * z
                })
                .collect();
            xs.push(x);
            owners.push(AgentId(p));
        }
    }

    let linear: Vec<f64> = xs
        .iter()
        .map(|x| weights.iter().zip(x).map(|(w, v)| w * v).sum())
        .collect();
    let mean_linear = linear.iter().sum::<f64>() / n as f64;
    let offset = logit(config.target_base_rate) - mean_linear;
    let oracle = GamingOracle::new(config, weights.clone(), offset)?;

    let alpha_star: Vec<f64> = linear.iter().map(|z| sigmoid(z + offset)).collect();
    let d_star: Vec<bool> = alpha_star
        .iter()
        .map(|&a| rng.random::<f64>() < a)
        .collect();

    let mut records = Vec::with_capacity(n);
    for (i, x) in xs.into_iter().enumerate() {
        let agent = owners[i];
        let a = alpha_star[i];
        let (respond_to, alpha_gamed) = match config.mode {
            GamingMode::Binary => {
                let truth = if d_star[i] { 1.0 } else { 0.0 };
                (oracle.response(agent, truth)?, oracle.rate(&x, agent)?)
            }
            GamingMode::Rate => {
                let r = oracle.response(agent, a)?;
                (r, r)
            }
        };
        let d = rng.random::<f64>() < respond_to;
        records.push(ObservationRecord {
            x,
            d,
            agent,
            hidden: Some(HiddenTruth {
                d_star: d_star[i],
                alpha_star: a,
                alpha_gamed,
            }),
        });
    }

    Ok(LabeledDataset {
        dataset: Dataset::new(records, agents, dim)?,
        truth_order: ground_truth_ranking(config),
        weights_w: weights,
        offset_b_d: offset,
        config: config.clone(),
        seed: rng.seed(),
        oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ids(r: &Ranking) -> Vec<usize> {
        r.order().iter().map(|a| a.0).collect()
    }

    #[test]
    fn means_with_zero_range_are_offset() {
        let m = agent_means(&[0.1, 0.5, 2.0], 0.0, -1.0, 2).unwrap();
        assert!(m.iter().all(|v| v == &vec![-1.0, -1.0]));
    }

    #[test]
    fn means_hit_range_endpoints() {
        let m = agent_means(&DEFAULT_LAMBDAS, 1.0, -1.0, 2).unwrap();
        assert_eq!(m[0], vec![-1.0, -1.0]);
        assert_eq!(m[19], vec![0.0, 0.0]);
        let e = std::f64::consts::E;
        let m = agent_means(&[e, e.powi(3)], 0.5, -1.0, 2).unwrap();
        assert_abs_diff_eq!(m[0][0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m[1][1], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn equal_lambdas_need_zero_range() {
        assert!(agent_means(&[0.2, 0.2], 0.5, -1.0, 2).is_err());
        assert!(agent_means(&[0.2, 0.2], 0.0, -1.0, 2).is_ok());
    }

    #[test]
    fn truth_ranking_sorts_by_lambda() {
        let mut c = SynthConfig {
            lambdas: vec![0.3, 0.001, 0.05],
            ..SynthConfig::default()
        };
        assert_eq!(ids(&ground_truth_ranking(&c)), vec![1, 2, 0]);
        c.lambdas = vec![0.2; 4];
        assert_eq!(ids(&ground_truth_ranking(&c)), vec![0, 1, 2, 3]);
        assert!(DEFAULT_LAMBDAS.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(
            ids(&ground_truth_ranking(&SynthConfig::default())),
            (0..20).collect::<Vec<_>>()
        );
    }

    #[test]
    fn default_dataset_shape_and_base_rate() {
        let ld = generate_dataset(&SynthConfig::default(), &mut Rng::new(3)).unwrap();
        assert_eq!(ld.dataset.len(), 10_000);
        assert_eq!(ld.dataset.agent_counts(), vec![500; 20]);
        // α* at the sample-mean covariate is exactly the target rate
        let dim = ld.dataset.covariate_dim();
        let mut mean_x = vec![0.0; dim];
        for r in ld.dataset.records() {
            for (m, v) in mean_x.iter_mut().zip(&r.x) {
                *m += v / ld.dataset.len() as f64;
            }
        }
        assert_abs_diff_eq!(ld.oracle().alpha_star(&mean_x), 0.05, epsilon = 1e-12);
        let mean_alpha: f64 = ld
            .dataset
            .records()
            .iter()
            .map(|r| r.hidden.unwrap().alpha_star)
            .sum::<f64>()
            / 10_000.0;
        assert!(mean_alpha > 0.04 && mean_alpha < 0.1, "{mean_alpha}");
    }

    #[test]
    fn gamed_rate_dominates_truth() {
        for mode in [GamingMode::Binary, GamingMode::Rate] {
            let c = SynthConfig {
                mode,
                per_agent_count: 100,
                ..SynthConfig::default()
            };
            let ld = generate_dataset(&c, &mut Rng::new(5)).unwrap();
            for r in ld.dataset.records() {
                let h = r.hidden.unwrap();
                assert!(h.alpha_gamed > h.alpha_star, "{mode:?}: {h:?}");
                if h.d_star && mode == GamingMode::Binary {
                    assert!(r.d);
                }
            }
        }
    }

    #[test]
    fn huge_deterrence_means_no_gaming() {
        let c = SynthConfig {
            lambdas: vec![1e9; 20],
            lambda_scale: 1.0,
            mean_range: 0.0,
            ..SynthConfig::default()
        };
        let ld = generate_dataset(&c, &mut Rng::new(11)).unwrap();
        let gap: f64 = ld
            .dataset
            .records()
            .iter()
            .map(|r| {
                let h = r.hidden.unwrap();
                h.alpha_gamed - h.alpha_star
            })
            .sum::<f64>()
            / ld.dataset.len() as f64;
        assert!(gap < 1e-4, "{gap}");
    }

    #[test]
    fn unscaled_reference_lambdas_saturate() {
        let c = SynthConfig {
            lambda_scale: 1.0,
            per_agent_count: 50,
            ..SynthConfig::default()
        };
        let ld = generate_dataset(&c, &mut Rng::new(1)).unwrap();
        assert!(ld.dataset.records().iter().all(|r| r.d));
    }

    #[test]
    fn gaming_is_monotone_across_agents_on_matched_bins() {
        let ld = generate_dataset(&SynthConfig::default(), &mut Rng::new(21)).unwrap();
        // identical α* bins across agents: compare the oracle uplift at fixed covariates
        let oracle = ld.oracle();
        for x in [[-2.0, -2.0], [-0.5, 0.0], [1.0, 1.5]] {
            let uplift: Vec<f64> = (0..20)
                .map(|p| oracle.rate(&x, AgentId(p)).unwrap() - oracle.alpha_star(&x))
                .collect();
            assert!(uplift.windows(2).all(|w| w[0] > w[1]), "{uplift:?}");
        }
        // and empirically, per-agent mean uplift decreases between agent quartiles
        let mut sums = [0.0; 4];
        for r in ld.dataset.records() {
            let h = r.hidden.unwrap();
            sums[r.agent.0 / 5] += h.alpha_gamed - h.alpha_star;
        }
        assert!(sums.windows(2).all(|w| w[0] > w[1]), "{sums:?}");
    }

    #[test]
    fn confounding_knob_moves_covariate_means() {
        let per_agent_mean = |ld: &LabeledDataset| -> Vec<f64> {
            let mut s = vec![0.0; 20];
            for r in ld.dataset.records() {
                s[r.agent.0] += r.x[0] / 500.0;
            }
            s
        };
        let flat = generate_dataset(
            &SynthConfig::default().with_mean_range(0.0),
            &mut Rng::new(2),
        )
        .unwrap();
        let m = per_agent_mean(&flat);
        // standard error of a 500-sample mean is ~0.045; 5 sigma band
        assert!(m.iter().all(|v| (v + 1.0).abs() < 0.23), "{m:?}");

        let steep = generate_dataset(
            &SynthConfig::default().with_mean_range(1.0),
            &mut Rng::new(2),
        )
        .unwrap();
        let m = per_agent_mean(&steep);
        let means = agent_means(&DEFAULT_LAMBDAS, 1.0, -1.0, 1).unwrap();
        for (got, want) in m.iter().zip(&means) {
            assert!((got - want[0]).abs() < 0.23);
        }
        assert!(m[19] - m[0] > 0.7);
    }

    #[test]
    fn generation_is_reproducible() {
        let c = SynthConfig {
            per_agent_count: 50,
            ..SynthConfig::default()
        };
        let a = generate_dataset(&c, &mut Rng::new(8)).unwrap();
        let b = generate_dataset(&c, &mut Rng::new(8)).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.metadata_string(), b.metadata_string());
        let other = generate_dataset(&c, &mut Rng::new(9)).unwrap();
        assert_ne!(a.dataset, other.dataset);
    }

    #[test]
    fn metadata_round_trip() {
        let c = SynthConfig {
            per_agent_count: 10,
            reward: RewardSpec::affine(2.0, 0.5).unwrap(),
            mode: GamingMode::Rate,
            ..SynthConfig::default()
        };
        let ld = generate_dataset(&c, &mut Rng::new(4)).unwrap();
        let meta = SynthMetadata::parse(&ld.metadata_string()).unwrap();
        assert_eq!(meta.seed, 4);
        assert_eq!(meta.config.lambdas, c.lambdas);
        assert_eq!(meta.weights_w, ld.weights_w);
        assert_eq!(meta.offset_b_d, ld.offset_b_d);
        assert_eq!(meta.config.mode, GamingMode::Rate);
        let x = [0.1, -0.2];
        assert_eq!(
            meta.oracle().unwrap().rate(&x, AgentId(3)).unwrap(),
            ld.oracle().rate(&x, AgentId(3)).unwrap()
        );
        assert!(SynthMetadata::parse("format = other\n").is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            SynthConfig {
                lambdas: vec![],
                ..SynthConfig::default()
            },
            SynthConfig {
                lambdas: vec![0.1, -1.0],
                ..SynthConfig::default()
            },
            SynthConfig {
                lambdas: vec![0.1, 0.1],
                ..SynthConfig::default()
            },
            SynthConfig {
                target_base_rate: 1.0,
                ..SynthConfig::default()
            },
            SynthConfig {
                sigma2: 0.0,
                ..SynthConfig::default()
            },
        ];
        for c in bad {
            assert!(generate_dataset(&c, &mut Rng::new(0)).is_err());
        }
    }
}
