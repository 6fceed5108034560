//! Experiment configuration, read from a TOML file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::baselines::DEFAULT_KNN_K;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorHyper, IpwMean, IpwWeighting, ModelKind, Solver};
use crate::metrics::{Relevance, DEFAULT_TOP_M};
use crate::ranking::AggregationRule;
use crate::synthgen::SynthConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Detector {
    Payout,
    Random,
    Knn,
    Ecod,
    SLearner,
    TLearner,
    SIpw,
    Psm,
}

impl Detector {
    pub const ALL: [Detector; 8] = [
        Detector::Payout,
        Detector::Random,
        Detector::Knn,
        Detector::Ecod,
        Detector::SLearner,
        Detector::TLearner,
        Detector::SIpw,
        Detector::Psm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Detector::Payout => "payout",
            Detector::Random => "random",
            Detector::Knn => "knn",
            Detector::Ecod => "ecod",
            Detector::SLearner => "s_learner",
            Detector::TLearner => "t_learner",
            Detector::SIpw => "s_ipw",
            Detector::Psm => "psm",
        }
    }

    /// Detectors that rank through an effect matrix.
    pub fn is_causal(self) -> bool {
        matches!(
            self,
            Detector::SLearner | Detector::TLearner | Detector::SIpw | Detector::Psm
        )
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Detector::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::parse("detector", format!("unknown detector {s:?}")))
    }
}

/// Parses a comma-separated detector list.
pub fn parse_detectors(list: &str) -> Result<Vec<Detector>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

/// Parses a comma-separated list of mean-range levels.
pub fn parse_mean_ranges(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::parse("mean range", e)))
        .collect()
}

/// `0.0, 0.1, ..., 1.0`.
pub fn default_mean_range_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Population settings; `mean_range` is overridden per grid level.
    pub synth: SynthConfig,
    pub mean_range_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub detectors: Vec<Detector>,
    pub train_frac: f64,
    pub model: ModelKind,
    pub hyper: EstimatorHyper,
    pub aggregation: AggregationRule,
    pub top_m: usize,
    pub relevance: Relevance,
    pub knn_k: usize,
    pub standardize: bool,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            mean_range_grid: default_mean_range_grid(),
            seeds: (0..10).collect(),
            detectors: Detector::ALL.to_vec(),
            train_frac: 0.7,
            model: ModelKind::Linear,
            hyper: EstimatorHyper::default(),
            aggregation: AggregationRule::BordaMean,
            top_m: DEFAULT_TOP_M,
            relevance: Relevance::KMinusRank,
            knn_k: DEFAULT_KNN_K,
            standardize: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mean_range_grid.is_empty() {
            return Err(Error::invalid("mean_range_grid must be non-empty"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds must be non-empty"));
        }
        if self.detectors.is_empty() {
            return Err(Error::invalid("detectors must be non-empty"));
        }
        for (i, a) in self.mean_range_grid.iter().enumerate() {
            if self.mean_range_grid[..i].contains(a) {
                return Err(Error::invalid(format!("duplicate mean range {a}")));
            }
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return Err(Error::invalid(format!("duplicate seed {s}")));
            }
        }
        for (i, d) in self.detectors.iter().enumerate() {
            if self.detectors[..i].contains(d) {
                return Err(Error::invalid(format!("duplicate detector {d}")));
            }
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::invalid("train_frac must lie in (0, 1)"));
        }
        let k = self.synth.lambdas.len();
        if self.top_m == 0 || self.top_m > k {
            return Err(Error::invalid(format!("top_m must lie in 1..={k}")));
        }
        if self.knn_k == 0 {
            return Err(Error::invalid("knn_k must be positive"));
        }
        for &m in &self.mean_range_grid {
            self.synth.clone().with_mean_range(m).validate()?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::parse("config", e))?;
        let cfg = raw.apply(ExperimentConfig::default())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Synthetic settings at one grid level.
    pub fn synth_at(&self, mean_range: f64) -> SynthConfig {
        self.synth.clone().with_mean_range(mean_range)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    out_dir: Option<PathBuf>,
    seeds: Option<Vec<u64>>,
    seed_count: Option<u64>,
    mean_range_grid: Option<Vec<f64>>,
    detectors: Option<Vec<String>>,
    train_frac: Option<f64>,
    #[serde(default)]
    synth: RawSynth,
    #[serde(default)]
    estimators: RawEstimators,
    #[serde(default)]
    metrics: RawMetrics,
    #[serde(default)]
    baselines: RawBaselines,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynth {
    lambdas: Option<Vec<f64>>,
    lambda_scale: Option<f64>,
    per_agent_count: Option<usize>,
    mean_offset: Option<f64>,
    sigma2: Option<f64>,
    covariate_dim: Option<usize>,
    target_base_rate: Option<f64>,
    reward: Option<String>,
    cost: Option<String>,
    mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimators {
    model: Option<String>,
    aggregation: Option<String>,
    solver: Option<String>,
    lr: Option<f64>,
    epochs: Option<usize>,
    l2: Option<f64>,
    tol: Option<f64>,
    mlp_hidden: Option<Vec<usize>>,
    mlp_lr: Option<f64>,
    mlp_epochs: Option<usize>,
    mlp_l2: Option<f64>,
    mlp_seed: Option<u64>,
    propensity_l2: Option<f64>,
    propensity_clip: Option<f64>,
    weighting: Option<String>,
    ipw_mean: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetrics {
    top_m: Option<usize>,
    relevance: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaselines {
    knn_k: Option<usize>,
    standardize: Option<bool>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_solver(s: &str) -> Result<Solver> {
    match s.trim() {
        "newton" => Ok(Solver::Newton),
        "gradient_descent" | "gd" => Ok(Solver::GradientDescent),
        other => Err(Error::parse("solver", format!("unknown solver {other:?}"))),
    }
}

fn parse_opt<T: FromStr<Err = Error>>(v: Option<String>) -> Result<Option<T>> {
    v.map(|s| s.parse()).transpose()
}

impl RawConfig {
    fn apply(self, mut c: ExperimentConfig) -> Result<ExperimentConfig> {
        set(&mut c.out_dir, self.out_dir);
        match (self.seeds, self.seed_count) {
            (Some(_), Some(_)) => {
                return Err(Error::parse("config", "give seeds or seed_count, not both"))
            }
            (Some(s), None) => c.seeds = s,
            (None, Some(n)) => c.seeds = (0..n).collect(),
            (None, None) => {}
        }
        set(&mut c.mean_range_grid, self.mean_range_grid);
        if let Some(d) = self.detectors {
            c.detectors = d.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        set(&mut c.train_frac, self.train_frac);

        let s = self.synth;
        set(&mut c.synth.lambdas, s.lambdas);
        set(&mut c.synth.lambda_scale, s.lambda_scale);
        set(&mut c.synth.per_agent_count, s.per_agent_count);
        set(&mut c.synth.mean_offset, s.mean_offset);
        set(&mut c.synth.sigma2, s.sigma2);
        set(&mut c.synth.covariate_dim, s.covariate_dim);
        set(&mut c.synth.target_base_rate, s.target_base_rate);
        set(&mut c.synth.reward, parse_opt(s.reward)?);
        set(&mut c.synth.cost, parse_opt(s.cost)?);
        set(&mut c.synth.mode, parse_opt(s.mode)?);

        let e = self.estimators;
        set(&mut c.model, parse_opt(e.model)?);
        set(&mut c.aggregation, parse_opt(e.aggregation)?);
        let h = &mut c.hyper;
        if let Some(s) = e.solver {
            h.logistic.solver = parse_solver(&s)?;
            h.propensity.solver = h.logistic.solver;
        }
        set(&mut h.logistic.lr, e.lr);
        set(&mut h.logistic.epochs, e.epochs);
        set(&mut h.logistic.l2, e.l2);
        set(&mut h.logistic.tol, e.tol);
        h.propensity.lr = h.logistic.lr;
        h.propensity.epochs = h.logistic.epochs;
        h.propensity.tol = h.logistic.tol;
        h.propensity.l2 = e.propensity_l2.unwrap_or(h.logistic.l2);
        set(&mut h.mlp.hidden, e.mlp_hidden);
        set(&mut h.mlp.lr, e.mlp_lr);
        set(&mut h.mlp.epochs, e.mlp_epochs);
        set(&mut h.mlp.l2, e.mlp_l2);
        set(&mut h.mlp.seed, e.mlp_seed);
        set(&mut h.propensity_clip, e.propensity_clip);
        set(&mut h.weighting, parse_opt::<IpwWeighting>(e.weighting)?);
        set(&mut h.ipw_mean, parse_opt::<IpwMean>(e.ipw_mean)?);

        set(&mut c.top_m, self.metrics.top_m);
        set(&mut c.relevance, parse_opt(self.metrics.relevance)?);
        set(&mut c.knn_k, self.baselines.knn_k);
        set(&mut c.standardize, self.baselines.standardize);
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_the_sweep() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.mean_range_grid.len(), 11);
        assert_eq!(c.mean_range_grid[3], 0.3);
        assert_eq!(c.seeds.len(), 10);
        assert_eq!(c.detectors.len(), 8);
    }

    #[test]
    fn empty_toml_is_the_default() {
        assert_eq!(
            format!("{:?}", ExperimentConfig::from_toml_str("").unwrap()),
            format!("{:?}", ExperimentConfig::default())
        );
    }

    #[test]
    fn toml_overrides() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            out_dir = "results"
            seed_count = 3
            mean_range_grid = [0.0, 1.0]
            detectors = ["payout", "s_ipw"]

            [synth]
            per_agent_count = 100
            mode = "rate"

            [estimators]
            model = "mlp"
            solver = "gd"
            l2 = 0.01
            mlp_hidden = [8]

            [metrics]
            top_m = 3
            "#,
        )
        .unwrap();
        assert_eq!(c.out_dir, PathBuf::from("results"));
        assert_eq!(c.seeds, vec![0, 1, 2]);
        assert_eq!(c.detectors, vec![Detector::Payout, Detector::SIpw]);
        assert_eq!(c.synth.per_agent_count, 100);
        assert_eq!(c.model, ModelKind::Mlp);
        assert_eq!(c.hyper.propensity.solver, Solver::GradientDescent);
        assert_eq!(c.hyper.propensity.l2, 0.01);
        assert_eq!(c.hyper.mlp.hidden, vec![8]);
        assert_eq!(c.top_m, 3);
    }

    #[test]
    fn contract_errors() {
        assert!(ExperimentConfig::from_toml_str("detectors = []").is_err());
        assert!(ExperimentConfig::from_toml_str("seeds = []").is_err());
        assert!(ExperimentConfig::from_toml_str("mean_range_grid = []").is_err());
        assert!(ExperimentConfig::from_toml_str("detectors = [\"oracle\"]").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("seeds = [1]\nseed_count = 2").is_err());
        assert!(ExperimentConfig::from_toml_str("seeds = [1, 1]").is_err());
        assert!(ExperimentConfig::from_toml_str("train_frac = 1.0").is_err());
    }

    #[test]
    fn list_flags() {
        assert_eq!(
            parse_detectors("payout, random,s_ipw").unwrap(),
            vec![Detector::Payout, Detector::Random, Detector::SIpw]
        );
        assert!(parse_detectors("payout,nope").is_err());
        assert_eq!(parse_mean_ranges("0,0.5").unwrap(), vec![0.0, 0.5]);
        for d in Detector::ALL {
            assert_eq!(d.name().parse::<Detector>().unwrap(), d);
        }
    }
}
