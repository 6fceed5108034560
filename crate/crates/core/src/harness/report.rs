//! Summaries of a complete results table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{Detector, ExperimentConfig};
use super::results::{mean_range_label, mean_std, ResultsTable};
use crate::error::Result;
use crate::io::{fmt_sig, write_atomic};
use crate::metrics::{exact_random_ausc, expected_random_ausc};

pub const AUSC_SUMMARY_FILE: &str = "ausc_summary.csv";
pub const CURVE_DIR: &str = "curves";
pub const ACCEPTANCE_FILE: &str = "acceptance_summary.txt";

/// One pass/fail line. `passed` is `None` when the table lacks the cells
/// the check needs.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: String,
    pub description: String,
    pub passed: Option<bool>,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(id: &str, description: &str, passed: Option<bool>, detail: String) -> Self {
        Self {
            id: id.to_string(),
            description: description.to_string(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let status = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        format!(
            "{status} {}: {} ({})",
            self.id, self.description, self.detail
        )
    }
}

pub fn ausc_summary_csv(table: &ResultsTable, config: &ExperimentConfig) -> String {
    let mut s = String::from("mean_range,detector,ausc_mean,ausc_std,n\n");
    for &m in &config.mean_range_grid {
        for &d in &config.detectors {
            let v = table.ausc_values(m, d);
            let (mean, std) = mean_std(&v);
            let _ = writeln!(
                s,
                "{},{d},{},{},{}",
                mean_range_label(m),
                fmt_sig(mean),
                fmt_sig(std),
                v.len()
            );
        }
    }
    s
}

/// Mean and standard deviation of sensitivity and DCG at every `k` for one
/// grid level.
pub fn curve_summary_csv(
    table: &ResultsTable,
    config: &ExperimentConfig,
    mean_range: f64,
) -> String {
    let k_total = config.synth.lambdas.len();
    let mut s =
        String::from("mean_range,detector,k,sensitivity_mean,sensitivity_std,dcg_mean,dcg_std,n\n");
    for &d in &config.detectors {
        for k in 1..=k_total {
            let rows: Vec<_> = table
                .curves()
                .iter()
                .filter(|r| r.mean_range == mean_range && r.detector == d && r.k == k)
                .collect();
            let sens: Vec<f64> = rows.iter().map(|r| r.sensitivity).collect();
            let dcg: Vec<f64> = rows.iter().map(|r| r.dcg).collect();
            let (sm, ss) = mean_std(&sens);
            let (dm, ds) = mean_std(&dcg);
            let _ = writeln!(
                s,
                "{},{d},{k},{},{},{},{},{}",
                mean_range_label(mean_range),
                fmt_sig(sm),
                fmt_sig(ss),
                fmt_sig(dm),
                fmt_sig(ds),
                rows.len()
            );
        }
    }
    s
}

pub fn curve_file_name(mean_range: f64) -> String {
    format!("curves_mr_{}.csv", mean_range_label(mean_range))
}

fn describe(table: &ResultsTable, m: f64, d: Detector) -> Option<(f64, f64)> {
    let v = table.ausc_values(m, d);
    (!v.is_empty()).then(|| mean_std(&v))
}

fn pm((mean, std): (f64, f64)) -> String {
    format!("{mean:.3}±{std:.3}")
}

/// The acceptance checks that read off a results table.
pub fn experiment_checks(table: &ResultsTable, k_total: usize) -> Result<Vec<CheckOutcome>> {
    let published = expected_random_ausc(k_total)?;
    let exact = exact_random_ausc(k_total)?;
    let mut out = Vec::new();

    let payout1 = describe(table, 1.0, Detector::Payout);
    let random1 = describe(table, 1.0, Detector::Random);
    out.push(match (payout1, random1) {
        (Some(p), Some(r)) => CheckOutcome::new(
            "A5",
            "payout-only below random at mean_range 1.0, payout < 0.42",
            Some(p.0 < r.0 && p.0 < 0.42),
            format!("payout {} vs random {}", pm(p), pm(r)),
        ),
        _ => CheckOutcome::new(
            "A5",
            "payout-only below random at mean_range 1.0",
            None,
            "needs payout and random at 1.0".into(),
        ),
    });

    let sipw1 = describe(table, 1.0, Detector::SIpw);
    out.push(match (sipw1, payout1) {
        (Some(c), Some(p)) => CheckOutcome::new(
            "A6",
            "S+IPW exceeds payout-only by >= 0.2 at mean_range 1.0",
            Some(c.0 - p.0 >= 0.2),
            format!("s_ipw {} vs payout {}, gap {:.3}", pm(c), pm(p), c.0 - p.0),
        ),
        _ => CheckOutcome::new(
            "A6",
            "S+IPW exceeds payout-only by >= 0.2",
            None,
            "needs s_ipw and payout at 1.0".into(),
        ),
    });

    let s0 = describe(table, 0.0, Detector::SLearner);
    let p0 = describe(table, 0.0, Detector::Payout);
    out.push(match s0 {
        Some(s) => CheckOutcome::new(
            "A7",
            "S-learner above random + 0.05 at mean_range 0.0",
            Some(s.0 > exact + 0.05),
            format!(
                "s_learner {} vs random expectation {exact:.3}; |s_learner - payout| = {}",
                pm(s),
                p0.map_or("n/a".to_string(), |p| format!("{:.3}", (s.0 - p.0).abs()))
            ),
        ),
        None => CheckOutcome::new(
            "A7",
            "S-learner above random at mean_range 0.0",
            None,
            "needs s_learner at 0.0".into(),
        ),
    });

    out.push(match p0 {
        Some(p) => CheckOutcome::new(
            "payout@0",
            "payout-only AUSC > 0.6 at mean_range 0.0",
            Some(p.0 > 0.6),
            format!("payout {}", pm(p)),
        ),
        None => CheckOutcome::new(
            "payout@0",
            "payout-only AUSC > 0.6 at mean_range 0.0",
            None,
            "needs payout at 0.0".into(),
        ),
    });

    let random: Vec<f64> = table
        .ausc_rows()
        .iter()
        .filter(|r| r.detector == Detector::Random)
        .map(|r| r.ausc)
        .collect();
    out.push(if random.is_empty() {
        CheckOutcome::new("random", "random AUSC near its expectation", None, "needs random".into())
    } else {
        let (mean, std) = mean_std(&random);
        CheckOutcome::new(
            "random",
            "random AUSC within 0.05 of the exact expectation",
            Some((mean - exact).abs() <= 0.05),
            format!(
                "random {mean:.3}±{std:.3} over {} rankings; exact {exact:.3}, (K-1)/(2K) = {published:.3}",
                random.len()
            ),
        )
    });
    Ok(out)
}

/// Files written by [`cmd_report`].
#[derive(Debug, Clone)]
pub struct ReportOutput {
    pub ausc_summary: PathBuf,
    pub curve_files: Vec<PathBuf>,
    pub acceptance: PathBuf,
    pub checks: Vec<CheckOutcome>,
}

/// Reads the results tables under `out_dir`, verifies they cover the whole
/// configured sweep, and writes the summaries.
pub fn cmd_report(config: &ExperimentConfig, out_dir: &Path) -> Result<ReportOutput> {
    config.validate()?;
    let k_total = config.synth.lambdas.len();
    let table = ResultsTable::read_dir(out_dir)?;
    table.check_complete(
        &config.mean_range_grid,
        &config.seeds,
        &config.detectors,
        k_total,
    )?;

    let ausc_summary = out_dir.join(AUSC_SUMMARY_FILE);
    write_atomic(&ausc_summary, ausc_summary_csv(&table, config).as_bytes())?;
    let mut curve_files = Vec::new();
    for &m in &config.mean_range_grid {
        let path = out_dir.join(CURVE_DIR).join(curve_file_name(m));
        write_atomic(&path, curve_summary_csv(&table, config, m).as_bytes())?;
        curve_files.push(path);
    }
    let checks = experiment_checks(&table, k_total)?;
    let mut text = String::new();
    for c in &checks {
        let _ = writeln!(text, "{}", c.line());
    }
    let acceptance = out_dir.join(ACCEPTANCE_FILE);
    write_atomic(&acceptance, text.as_bytes())?;
    Ok(ReportOutput {
        ausc_summary,
        curve_files,
        acceptance,
        checks,
    })
}
