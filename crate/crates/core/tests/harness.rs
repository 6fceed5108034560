use std::fs;
use std::path::Path;

use gamerank::harness::pipeline::{cell_dir, dataset_path};
use gamerank::harness::{
    cmd_generate, cmd_report, cmd_run, Detector, ExperimentConfig, ResultsTable,
};
use gamerank::metrics::{exact_random_ausc, MetricsReport};
use gamerank::ranking::ScoredRanking;
use gamerank::Error;

fn small(grid: Vec<f64>, seeds: Vec<u64>, detectors: Vec<Detector>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.mean_range_grid = grid;
    cfg.seeds = seeds;
    cfg.detectors = detectors;
    cfg
}

fn count_files(dir: &Path, ext: &str) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == ext)
        })
        .count()
}

#[test]
fn default_sweep_generates_110_datasets_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let paths = cmd_generate(&cfg, dir.path()).unwrap();
    assert_eq!(paths.len(), 110);
    let datasets = dir.path().join("datasets");
    assert_eq!(count_files(&datasets, "csv"), 110);
    assert_eq!(count_files(&datasets, "meta"), 110);

    let first = fs::read(dataset_path(dir.path(), 0.3, 7)).unwrap();
    cmd_generate(&cfg, dir.path()).unwrap();
    assert_eq!(fs::read(dataset_path(dir.path(), 0.3, 7)).unwrap(), first);
}

#[test]
fn single_cell_generates_one_file_matching_the_sweep() {
    let one = tempfile::tempdir().unwrap();
    let cfg = small(vec![0.0], vec![42], vec![Detector::Payout]);
    assert_eq!(cmd_generate(&cfg, one.path()).unwrap().len(), 1);
    assert_eq!(count_files(&one.path().join("datasets"), "csv"), 1);

    // A cell's dataset does not depend on the rest of the grid.
    let two = tempfile::tempdir().unwrap();
    cmd_generate(
        &small(vec![1.0, 0.0], vec![3, 42], vec![Detector::Payout]),
        two.path(),
    )
    .unwrap();
    assert_eq!(
        fs::read(dataset_path(one.path(), 0.0, 42)).unwrap(),
        fs::read(dataset_path(two.path(), 0.0, 42)).unwrap()
    );
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = small(vec![0.0], vec![0], vec![Detector::Payout]);
    assert!(cmd_generate(&cfg, &blocker).is_err());
}

#[test]
fn random_detector_averages_near_its_expectation() {
    let dir = tempfile::tempdir().unwrap();
    // 30 rankings per level keep the standard error near 0.02.
    let cfg = small(
        vec![0.0, 0.5, 1.0],
        (0..30).collect(),
        vec![Detector::Random],
    );
    cmd_generate(&cfg, dir.path()).unwrap();
    let table = cmd_run(&cfg, dir.path()).unwrap();
    let expected = exact_random_ausc(20).unwrap();
    for m in [0.0, 0.5, 1.0] {
        let mean = table.mean_ausc(m, Detector::Random).unwrap();
        assert!((mean - expected).abs() < 0.05, "mean_range {m}: {mean}");
    }
}

#[test]
fn payout_is_strong_without_confounding() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(vec![0.0], (0..10).collect(), vec![Detector::Payout]);
    cmd_generate(&cfg, dir.path()).unwrap();
    let table = cmd_run(&cfg, dir.path()).unwrap();
    let mean = table.mean_ausc(0.0, Detector::Payout).unwrap();
    assert!(mean > 0.6, "{mean}");
}

#[test]
fn run_contract_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(vec![0.0, 1.0], vec![0], vec![]);
    assert!(cmd_run(&cfg, dir.path()).is_err());

    let cfg = small(vec![0.0, 1.0], vec![0], vec![Detector::Payout]);
    cmd_generate(
        &small(vec![0.0], vec![0], vec![Detector::Payout]),
        dir.path(),
    )
    .unwrap();
    match cmd_run(&cfg, dir.path()) {
        Err(Error::MissingInput(msg)) => {
            assert!(msg.contains("mr_1_seed_0.csv"), "{msg}");
            assert!(!msg.contains("mr_0_seed_0.csv"), "{msg}");
        }
        other => panic!("expected missing input, got {other:?}"),
    }
}

#[test]
fn full_pipeline_reports_and_leaves_an_audit_trail() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(
        gamerank::harness::config::default_mean_range_grid(),
        vec![0, 1],
        Detector::ALL.to_vec(),
    );
    cfg.synth.per_agent_count = 120;
    cmd_generate(&cfg, dir.path()).unwrap();
    let table = cmd_run(&cfg, dir.path()).unwrap();
    assert_eq!(table.ausc_rows().len(), 11 * 2 * 8);
    assert_eq!(table.curves().len(), 11 * 2 * 8 * 20);

    // Identical config, identical results.
    let again = tempfile::tempdir().unwrap();
    cmd_generate(&cfg, again.path()).unwrap();
    assert!(cmd_run(&cfg, again.path()).unwrap() == table);

    // Metrics are re-derivable from the stored ranking files.
    for row in table.ausc_rows() {
        let cell = cell_dir(dir.path(), row.mean_range, row.seed);
        let read = |p: &Path| {
            ScoredRanking::read_csv(fs::File::open(p).unwrap())
                .unwrap()
                .ranking
        };
        let pred = read(&cell.join("rankings").join(format!("{}.csv", row.detector)));
        let truth = read(&cell.join("truth.csv"));
        let rep = MetricsReport::compute(&pred, &truth, cfg.top_m, cfg.relevance).unwrap();
        assert!((rep.ausc - row.ausc).abs() < 1e-8);
        if row.detector.is_causal() {
            assert!(cell
                .join("effects")
                .join(format!("{}.csv", row.detector))
                .exists());
        }
    }

    let out = cmd_report(&cfg, dir.path()).unwrap();
    assert_eq!(out.curve_files.len(), 11);
    assert_eq!(count_files(&dir.path().join("curves"), "csv"), 11);
    let summary = fs::read_to_string(&out.ausc_summary).unwrap();
    assert_eq!(summary.lines().count(), 1 + 11 * 8);
    assert!(summary.starts_with("mean_range,detector,ausc_mean,ausc_std,n\n"));
    let acceptance = fs::read_to_string(&out.acceptance).unwrap();
    let a5 = acceptance.lines().find(|l| l.contains("A5:")).unwrap();
    assert!(a5.contains("payout") && a5.contains("random"), "{a5}");

    // A wider config than the results cover is reported as incomplete.
    let mut wider = cfg.clone();
    wider.seeds.push(2);
    match cmd_report(&wider, dir.path()) {
        Err(Error::IncompleteResults(msg)) => assert!(msg.contains("seed=2"), "{msg}"),
        other => panic!("expected incomplete results, got {other:?}"),
    }
    // Stored tables carry 9 significant digits.
    let back = ResultsTable::read_dir(dir.path()).unwrap();
    assert_eq!(back.curves_csv(), table.curves_csv());
    assert_eq!(back.ausc_csv(), table.ausc_csv());
}
