//! The long-format results table: one curve row per `(mean_range, seed,
//! detector, k)` and one AUSC row per `(mean_range, seed, detector)`.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::path::Path;

use super::config::Detector;
use crate::error::{Error, Result};
use crate::io::{fmt_sig, read_to_string, write_atomic};
use crate::metrics::MetricsReport;

pub const CURVES_FILE: &str = "results_curves.csv";
pub const AUSC_FILE: &str = "results_ausc.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub mean_range: f64,
    pub seed: u64,
    pub detector: Detector,
    pub k: usize,
    pub sensitivity: f64,
    pub dcg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuscRow {
    pub mean_range: f64,
    pub seed: u64,
    pub detector: Detector,
    pub ausc: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    curves: Vec<CurveRow>,
    ausc: Vec<AuscRow>,
}

fn cell_cmp(a: (f64, u64, Detector), b: (f64, u64, Detector)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
}

/// Label used in file names and error messages for a grid level.
pub fn mean_range_label(mean_range: f64) -> String {
    fmt_sig(mean_range)
}

impl ResultsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn curves(&self) -> &[CurveRow] {
        &self.curves
    }

    pub fn ausc_rows(&self) -> &[AuscRow] {
        &self.ausc
    }

    pub fn push_report(
        &mut self,
        mean_range: f64,
        seed: u64,
        detector: Detector,
        report: &MetricsReport,
    ) {
        for (i, (s, d)) in report.sensitivity.iter().zip(&report.dcg).enumerate() {
            self.curves.push(CurveRow {
                mean_range,
                seed,
                detector,
                k: i + 1,
                sensitivity: *s,
                dcg: *d,
            });
        }
        self.ausc.push(AuscRow {
            mean_range,
            seed,
            detector,
            ausc: report.ausc,
        });
    }

    /// Sorts rows by key and rejects duplicates.
    pub fn finish(mut self) -> Result<Self> {
        self.curves.sort_by(|a, b| {
            cell_cmp(
                (a.mean_range, a.seed, a.detector),
                (b.mean_range, b.seed, b.detector),
            )
            .then(a.k.cmp(&b.k))
        });
        self.ausc.sort_by(|a, b| {
            cell_cmp(
                (a.mean_range, a.seed, a.detector),
                (b.mean_range, b.seed, b.detector),
            )
        });
        for w in self.curves.windows(2) {
            if (w[0].mean_range, w[0].seed, w[0].detector, w[0].k)
                == (w[1].mean_range, w[1].seed, w[1].detector, w[1].k)
            {
                return Err(Error::invalid(format!(
                    "duplicate curve row mean_range={} seed={} detector={} k={}",
                    mean_range_label(w[0].mean_range),
                    w[0].seed,
                    w[0].detector,
                    w[0].k
                )));
            }
        }
        for w in self.ausc.windows(2) {
            if (w[0].mean_range, w[0].seed, w[0].detector)
                == (w[1].mean_range, w[1].seed, w[1].detector)
            {
                return Err(Error::invalid(format!(
                    "duplicate ausc row mean_range={} seed={} detector={}",
                    mean_range_label(w[0].mean_range),
                    w[0].seed,
                    w[0].detector
                )));
            }
        }
        Ok(self)
    }

    /// Errors naming every `(mean_range, seed, detector)` cell without an
    /// AUSC row or with a short curve.
    pub fn check_complete(
        &self,
        grid: &[f64],
        seeds: &[u64],
        detectors: &[Detector],
        k_total: usize,
    ) -> Result<()> {
        let have: BTreeSet<(u64, u64, Detector)> = self
            .ausc
            .iter()
            .map(|r| (r.mean_range.to_bits(), r.seed, r.detector))
            .collect();
        let mut missing = Vec::new();
        for &m in grid {
            for &s in seeds {
                for &d in detectors {
                    let curve_len = self
                        .curves
                        .iter()
                        .filter(|r| r.mean_range == m && r.seed == s && r.detector == d)
                        .count();
                    if !have.contains(&(m.to_bits(), s, d)) || curve_len != k_total {
                        missing.push(format!(
                            "(mean_range={}, seed={s}, detector={d})",
                            mean_range_label(m)
                        ));
                    }
                }
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::IncompleteResults(missing.join(", ")))
        }
    }

    pub fn ausc_values(&self, mean_range: f64, detector: Detector) -> Vec<f64> {
        self.ausc
            .iter()
            .filter(|r| r.mean_range == mean_range && r.detector == detector)
            .map(|r| r.ausc)
            .collect()
    }

    pub fn mean_ausc(&self, mean_range: f64, detector: Detector) -> Option<f64> {
        let v = self.ausc_values(mean_range, detector);
        (!v.is_empty()).then(|| mean_std(&v).0)
    }

    pub fn curves_csv(&self) -> String {
        let mut s = String::from("mean_range,seed,detector,k,sensitivity,dcg\n");
        for r in &self.curves {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                mean_range_label(r.mean_range),
                r.seed,
                r.detector,
                r.k,
                fmt_sig(r.sensitivity),
                fmt_sig(r.dcg)
            ));
        }
        s
    }

    pub fn ausc_csv(&self) -> String {
        let mut s = String::from("mean_range,seed,detector,ausc\n");
        for r in &self.ausc {
            s.push_str(&format!(
                "{},{},{},{}\n",
                mean_range_label(r.mean_range),
                r.seed,
                r.detector,
                fmt_sig(r.ausc)
            ));
        }
        s
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(CURVES_FILE), self.curves_csv().as_bytes())?;
        write_atomic(&dir.join(AUSC_FILE), self.ausc_csv().as_bytes())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let mut table = ResultsTable::new();
        for path in [dir.join(CURVES_FILE), dir.join(AUSC_FILE)] {
            if !path.exists() {
                return Err(Error::MissingInput(path.display().to_string()));
            }
        }
        let curves = read_to_string(&dir.join(CURVES_FILE))?;
        for (line, row) in rows(
            &curves,
            CURVES_FILE,
            &["mean_range", "seed", "detector", "k", "sensitivity", "dcg"],
        )? {
            table.curves.push(CurveRow {
                mean_range: field(&row[0], CURVES_FILE, line)?,
                seed: field(&row[1], CURVES_FILE, line)?,
                detector: row[2].parse()?,
                k: field(&row[3], CURVES_FILE, line)?,
                sensitivity: field(&row[4], CURVES_FILE, line)?,
                dcg: field(&row[5], CURVES_FILE, line)?,
            });
        }
        let ausc = read_to_string(&dir.join(AUSC_FILE))?;
        for (line, row) in rows(
            &ausc,
            AUSC_FILE,
            &["mean_range", "seed", "detector", "ausc"],
        )? {
            table.ausc.push(AuscRow {
                mean_range: field(&row[0], AUSC_FILE, line)?,
                seed: field(&row[1], AUSC_FILE, line)?,
                detector: row[2].parse()?,
                ausc: field(&row[3], AUSC_FILE, line)?,
            });
        }
        table.finish()
    }
}

fn rows(text: &str, what: &str, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let got: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if got != header {
        return Err(Error::parse(
            what,
            format!(
                "expected header {}, got {}",
                header.join(","),
                got.join(",")
            ),
        ));
    }
    rdr.records()
        .enumerate()
        .map(|(i, r)| r.map(|r| (i + 2, r)).map_err(Error::from))
        .collect()
}

fn field<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| Error::parse(format!("{what} line {line}"), e))
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
