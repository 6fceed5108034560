//! Dataset generation and the per-cell detection pipeline.

use std::path::{Path, PathBuf};

use super::config::{Detector, ExperimentConfig};
use super::results::{mean_range_label, ResultsTable};
use crate::baselines::{
    ecod_ranking, knn_anomaly_ranking, payout_only_ranking, random_ranking, AnomalyScores,
};
use crate::domain::{split_dataset, Dataset, Ranking};
use crate::error::{Error, Result};
use crate::estimators::{
    effect_matrix, fit_propensity, fit_s_ipw, fit_s_learner, fit_t_learner, psm_effect_matrix,
    EffectMatrix,
};
use crate::io::{
    dataset_csv_string, read_dataset_csv, read_dataset_file, read_to_string, write_atomic,
};
use crate::metrics::MetricsReport;
use crate::ranking::{rank_from_effects, ScoredRanking};
use crate::rng::{stage, Rng};
use crate::synthgen::{generate_dataset, ground_truth_ranking, LabeledDataset, SynthMetadata};

pub const DATASET_DIR: &str = "datasets";
pub const CELL_DIR: &str = "cells";

/// Sub-stream index of a grid level; depends only on the level itself so a
/// dataset does not change when the grid around it does.
pub fn cell_index(mean_range: f64) -> u64 {
    mean_range.to_bits()
}

pub fn cell_name(mean_range: f64, seed: u64) -> String {
    format!("mr_{}_seed_{seed}", mean_range_label(mean_range))
}

pub fn dataset_path(out_dir: &Path, mean_range: f64, seed: u64) -> PathBuf {
    out_dir
        .join(DATASET_DIR)
        .join(format!("{}.csv", cell_name(mean_range, seed)))
}

pub fn metadata_path(out_dir: &Path, mean_range: f64, seed: u64) -> PathBuf {
    out_dir
        .join(DATASET_DIR)
        .join(format!("{}.meta", cell_name(mean_range, seed)))
}

pub fn cell_dir(out_dir: &Path, mean_range: f64, seed: u64) -> PathBuf {
    out_dir.join(CELL_DIR).join(cell_name(mean_range, seed))
}

/// Every `(mean_range, seed)` pair of the sweep, grid-major.
pub fn grid_cells(config: &ExperimentConfig) -> Vec<(f64, u64)> {
    config
        .mean_range_grid
        .iter()
        .flat_map(|&m| config.seeds.iter().map(move |&s| (m, s)))
        .collect()
}

#[cfg(feature = "parallel")]
fn map_cells<T: Send>(
    cells: &[(f64, u64)],
    f: impl Fn(f64, u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    cells.par_iter().map(|&(m, s)| f(m, s)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_cells<T: Send>(
    cells: &[(f64, u64)],
    f: impl Fn(f64, u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    cells.iter().map(|&(m, s)| f(m, s)).collect()
}

pub fn generate_cell(
    config: &ExperimentConfig,
    mean_range: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    let mut rng = Rng::new(seed).substream(cell_index(mean_range), stage::GENERATE);
    generate_dataset(&config.synth_at(mean_range), &mut rng)
}

/// Writes one dataset CSV and its metadata sidecar per grid cell.
pub fn cmd_generate(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let cells = grid_cells(config);
    map_cells(&cells, |m, s| {
        let labeled = generate_cell(config, m, s)?;
        let path = dataset_path(out_dir, m, s);
        write_atomic(&path, dataset_csv_string(&labeled.dataset)?.as_bytes())?;
        write_atomic(
            &metadata_path(out_dir, m, s),
            labeled.metadata_string().as_bytes(),
        )?;
        Ok(path)
    })
}

/// A dataset ready for detection, with the ground truth it was drawn from.
#[derive(Debug, Clone)]
pub struct CellInput {
    pub mean_range: f64,
    pub seed: u64,
    pub dataset: Dataset,
    pub truth: Ranking,
}

impl CellInput {
    pub fn load(out_dir: &Path, mean_range: f64, seed: u64) -> Result<Self> {
        let meta =
            SynthMetadata::parse(&read_to_string(&metadata_path(out_dir, mean_range, seed))?)?;
        let agents = meta.config.agents()?;
        let dataset = read_dataset_file(&dataset_path(out_dir, mean_range, seed), Some(&agents))?;
        Ok(Self {
            mean_range,
            seed,
            dataset,
            truth: ground_truth_ranking(&meta.config),
        })
    }

    /// Generates the cell in memory, passing the dataset through its CSV form
    /// so results match a run over generated files exactly.
    pub fn generate(config: &ExperimentConfig, mean_range: f64, seed: u64) -> Result<Self> {
        let labeled = generate_cell(config, mean_range, seed)?;
        let text = dataset_csv_string(&labeled.dataset)?;
        let dataset = read_dataset_csv(text.as_bytes(), Some(labeled.dataset.agents()))?;
        Ok(Self {
            mean_range,
            seed,
            dataset,
            truth: labeled.truth_order,
        })
    }
}

/// What one detector produced for one dataset.
#[derive(Debug, Clone)]
pub struct Detection {
    pub detector: Detector,
    pub scored: ScoredRanking,
    pub effects: Option<EffectMatrix>,
    pub anomaly: Option<AnomalyScores>,
}

fn from_ranking(ranking: &Ranking) -> Result<ScoredRanking> {
    let n = ranking.len();
    let scores = ranking
        .positions()
        .iter()
        .map(|&p| (n - p) as f64)
        .collect();
    ScoredRanking::from_scores(scores)
}

/// Fits `detector` on `train` and ranks the agents on `test`. `rng` is used
/// only by the random baseline.
pub fn detect(
    detector: Detector,
    train: &Dataset,
    test: &Dataset,
    config: &ExperimentConfig,
    rng: &mut Rng,
) -> Result<Detection> {
    let hyper = &config.hyper;
    let mut effects = None;
    let mut anomaly = None;
    let scored = match detector {
        Detector::Payout => {
            let rates: Vec<f64> = test
                .agent_rates()
                .into_iter()
                .map(|r| r.unwrap_or(f64::NAN))
                .collect();
            let scored = ScoredRanking::from_scores(rates)?;
            debug_assert_eq!(scored.ranking, payout_only_ranking(test)?);
            scored
        }
        Detector::Random => from_ranking(&random_ranking(test.num_agents(), rng)?)?,
        Detector::Knn => {
            let (_, scores) = knn_anomaly_ranking(test, config.knn_k, config.standardize)?;
            let scored = ScoredRanking::from_scores(scores.agent_means.clone())?;
            anomaly = Some(scores);
            scored
        }
        Detector::Ecod => {
            let (_, scores) = ecod_ranking(test, config.standardize)?;
            let scored = ScoredRanking::from_scores(scores.agent_means.clone())?;
            anomaly = Some(scores);
            scored
        }
        Detector::SLearner | Detector::TLearner | Detector::SIpw | Detector::Psm => {
            let t = match detector {
                Detector::SLearner => {
                    effect_matrix(&fit_s_learner(train, config.model, hyper)?, test)?
                }
                Detector::TLearner => {
                    effect_matrix(&fit_t_learner(train, config.model, hyper)?, test)?
                }
                Detector::SIpw => effect_matrix(&fit_s_ipw(train, config.model, hyper)?, test)?,
                _ => {
                    let prop = fit_propensity(train, &hyper.propensity, hyper.propensity_clip)?;
                    psm_effect_matrix(&prop, test)?.0
                }
            };
            let scored = rank_from_effects(&t, config.aggregation)?;
            effects = Some(t);
            scored
        }
    };
    Ok(Detection {
        detector,
        scored,
        effects,
        anomaly,
    })
}

/// Splits the cell's dataset and runs every configured detector on it.
pub fn run_cell(
    config: &ExperimentConfig,
    input: &CellInput,
) -> Result<Vec<(Detection, MetricsReport)>> {
    let root = Rng::new(input.seed);
    let idx = cell_index(input.mean_range);
    let (train, test) = split_dataset(
        &input.dataset,
        config.train_frac,
        &mut root.substream(idx, stage::SPLIT),
    )?;
    config
        .detectors
        .iter()
        .map(|&d| {
            let mut rng = root.substream(idx, stage::RANDOM_RANKING);
            let det = detect(d, &train, &test, config, &mut rng)?;
            let report = MetricsReport::compute(
                &det.scored.ranking,
                &input.truth,
                config.top_m,
                config.relevance,
            )?;
            Ok((det, report))
        })
        .collect()
}

fn persist_cell(
    out_dir: &Path,
    input: &CellInput,
    outputs: &[(Detection, MetricsReport)],
) -> Result<()> {
    let dir = cell_dir(out_dir, input.mean_range, input.seed);
    ScoredRanking::from_scores(
        input
            .truth
            .positions()
            .iter()
            .map(|&p| (input.truth.len() - p) as f64)
            .collect(),
    )?
    .write_file(&dir.join("truth.csv"))?;
    for (det, report) in outputs {
        let name = det.detector.name();
        det.scored
            .write_file(&dir.join("rankings").join(format!("{name}.csv")))?;
        report.write_file(&dir.join("metrics").join(format!("{name}.csv")))?;
        if let Some(t) = &det.effects {
            t.write_file(&dir.join("effects").join(format!("{name}.csv")))?;
        }
        if let Some(a) = &det.anomaly {
            a.write_file(&dir.join("anomaly").join(format!("{name}.csv")))?;
        }
    }
    Ok(())
}

fn collect(
    config: &ExperimentConfig,
    per_cell: Vec<(f64, u64, Vec<(Detection, MetricsReport)>)>,
) -> Result<ResultsTable> {
    let mut table = ResultsTable::new();
    for (m, s, outputs) in per_cell {
        for (det, report) in outputs {
            table.push_report(m, s, det.detector, &report);
        }
    }
    let table = table.finish()?;
    table.check_complete(
        &config.mean_range_grid,
        &config.seeds,
        &config.detectors,
        config.synth.lambdas.len(),
    )?;
    Ok(table)
}

/// Runs every detector on every generated dataset under `out_dir`, persisting
/// rankings, effect matrices and metrics per cell plus the two results tables.
pub fn cmd_run(config: &ExperimentConfig, out_dir: &Path) -> Result<ResultsTable> {
    config.validate()?;
    let cells = grid_cells(config);
    let missing: Vec<String> = cells
        .iter()
        .flat_map(|&(m, s)| [dataset_path(out_dir, m, s), metadata_path(out_dir, m, s)])
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingInput(format!(
            "{} dataset file(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    let per_cell = map_cells(&cells, |m, s| {
        let input = CellInput::load(out_dir, m, s)?;
        let outputs = run_cell(config, &input)?;
        persist_cell(out_dir, &input, &outputs)?;
        log::info!("finished {}", cell_name(m, s));
        Ok((m, s, outputs))
    })?;
    let table = collect(config, per_cell)?;
    table.write_dir(out_dir)?;
    Ok(table)
}

/// Generates and runs the whole sweep without touching the file system.
pub fn run_in_memory(config: &ExperimentConfig) -> Result<ResultsTable> {
    config.validate()?;
    let cells = grid_cells(config);
    let per_cell = map_cells(&cells, |m, s| {
        let input = CellInput::generate(config, m, s)?;
        Ok((m, s, run_cell(config, &input)?))
    })?;
    collect(config, per_cell)
}

/// Ranks a single dataset with one detector: split, fit on train, rank on test.
pub fn rank_dataset(
    dataset: &Dataset,
    detector: Detector,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<Detection> {
    let root = Rng::new(seed);
    let (train, test) = split_dataset(
        dataset,
        config.train_frac,
        &mut root.substream(0, stage::SPLIT),
    )?;
    detect(
        detector,
        &train,
        &test,
        config,
        &mut root.substream(0, stage::RANDOM_RANKING),
    )
}
