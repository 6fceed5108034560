//! Flat-file formats: dataset CSV, number formatting and atomic writes.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::domain::{AgentId, AgentSpec, Dataset, HiddenTruth, ObservationRecord};
use crate::error::{Error, Result};

/// Formats a float with 9 significant digits, fixed notation for moderate
/// magnitudes and scientific otherwise, trailing zeros trimmed.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Writes `bytes` to `path` through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Header is `agent_id,d,x0,..,x{dim-1}` plus `d_star,alpha_star,alpha_gamed`
/// when every record carries hidden truth.
pub fn write_dataset_csv<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let hidden = ds.has_hidden();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["agent_id".to_string(), "d".to_string()];
    header.extend((0..ds.covariate_dim()).map(|j| format!("x{j}")));
    if hidden {
        header.extend(["d_star", "alpha_star", "alpha_gamed"].map(String::from));
    }
    w.write_record(&header)?;
    for r in ds.records() {
        let mut row = vec![r.agent.to_string(), u8::from(r.d).to_string()];
        row.extend(r.x.iter().map(|&v| fmt_sig(v)));
        if let (true, Some(h)) = (hidden, r.hidden) {
            row.push(u8::from(h.d_star).to_string());
            row.push(fmt_sig(h.alpha_star));
            row.push(fmt_sig(h.alpha_gamed));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn dataset_csv_string(ds: &Dataset) -> Result<String> {
    let mut buf = Vec::new();
    write_dataset_csv(ds, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Reads the dataset CSV format. When `agents` is `None` the agent list is
/// inferred as `0..=max(agent_id)` with a placeholder deterrence of 1.0, since
/// the deterrence parameter is not observable.
pub fn read_dataset_csv<R: Read>(input: R, agents: Option<&[AgentSpec]>) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let agent_col =
        col("agent_id").ok_or_else(|| Error::parse("dataset", "missing agent_id column"))?;
    let d_col = col("d").ok_or_else(|| Error::parse("dataset", "missing d column"))?;
    let mut x_cols = Vec::new();
    while let Some(c) = col(&format!("x{}", x_cols.len())) {
        x_cols.push(c);
    }
    if x_cols.is_empty() {
        return Err(Error::parse("dataset", "no covariate columns x0.."));
    }
    let hidden_cols = match (col("d_star"), col("alpha_star"), col("alpha_gamed")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        (None, None, None) => None,
        _ => return Err(Error::parse("dataset", "partial hidden columns")),
    };

    let num = |s: &str, line: usize| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::parse(format!("dataset row {line}"), e))
    };
    let bit = |s: &str, line: usize| -> Result<bool> {
        match s.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::parse(
                format!("dataset row {line}"),
                format!("expected 0/1, got {other:?}"),
            )),
        }
    };

    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let agent = row[agent_col]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::parse(format!("dataset row {line}"), e))?;
        let x = x_cols
            .iter()
            .map(|&c| num(&row[c], line))
            .collect::<Result<Vec<_>>>()?;
        let hidden = match hidden_cols {
            Some((a, b, c)) => Some(HiddenTruth {
                d_star: bit(&row[a], line)?,
                alpha_star: num(&row[b], line)?,
                alpha_gamed: num(&row[c], line)?,
            }),
            None => None,
        };
        records.push(ObservationRecord {
            x,
            d: bit(&row[d_col], line)?,
            agent: AgentId(agent),
            hidden,
        });
    }

    let agents = match agents {
        Some(a) => a.to_vec(),
        None => {
            let n = records.iter().map(|r| r.agent.0 + 1).max().unwrap_or(0);
            (0..n)
                .map(|i| AgentSpec::new(i, 1.0))
                .collect::<Result<_>>()?
        }
    };
    Dataset::new(records, agents, x_cols.len())
}

pub fn read_dataset_file(path: &Path, agents: Option<&[AgentSpec]>) -> Result<Dataset> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_csv(f, agents)
}
