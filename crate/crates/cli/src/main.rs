use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gamerank::harness::{
    cmd_generate, cmd_report, cmd_run, parse_detectors, parse_mean_ranges, rank_dataset,
    run_acceptance, Detector, ExperimentConfig,
};
use gamerank::io::{read_dataset_file, read_to_string};
use gamerank::synthgen::SynthMetadata;

/// Simulate strategic gaming across agents, rank agents with causal and
/// baseline detectors, and score the rankings.
#[derive(Parser, Debug)]
#[command(name = "gamerank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir` in the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Comma-separated detectors: payout,random,knn,ecod,s_learner,t_learner,s_ipw,psm
    #[arg(long, value_name = "LIST")]
    detectors: Option<String>,
    /// Comma-separated mean-range levels.
    #[arg(long = "mean-range", value_name = "LIST")]
    mean_range: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one synthetic dataset per (mean range, seed).
    Generate(Common),
    /// Run every detector on every generated dataset.
    Run(Common),
    /// Summarize a complete run.
    Report(Common),
    /// Rank the agents of a single dataset with one detector.
    Rank {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV; a sibling `.meta` file is used for agent ids when present.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Also write the effect matrix of a causal detector here.
        #[arg(long, value_name = "PATH")]
        effects: Option<PathBuf>,
    },
    /// Run the acceptance suite; exits with 2 when a criterion fails.
    Verify(Common),
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.seeds = vec![s];
    }
    if let Some(d) = &c.detectors {
        cfg.detectors = parse_detectors(d)?;
    }
    if let Some(m) = &c.mean_range {
        cfg.mean_range_grid = parse_mean_ranges(m)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn rank(common: &Common, input: &Path, effects: Option<&Path>) -> Result<()> {
    let cfg = load_config(common)?;
    let [detector]: [Detector; 1] = cfg
        .detectors
        .clone()
        .try_into()
        .map_err(|_| anyhow::anyhow!("rank needs exactly one detector (--detectors NAME)"))?;
    let meta_path = input.with_extension("meta");
    let agents = if meta_path.exists() {
        Some(
            SynthMetadata::parse(&read_to_string(&meta_path)?)?
                .config
                .agents()?,
        )
    } else {
        None
    };
    let dataset = read_dataset_file(input, agents.as_deref())?;
    let det = rank_dataset(&dataset, detector, &cfg, cfg.seeds[0])?;
    match &common.out {
        Some(p) => det.scored.write_file(p)?,
        None => print!("{}", det.scored.to_csv_string()?),
    }
    if let Some(p) = effects {
        match &det.effects {
            Some(t) => t.write_file(p)?,
            None => bail!("detector {detector} does not produce an effect matrix"),
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(c) => {
            let cfg = load_config(&c)?;
            let paths = cmd_generate(&cfg, &cfg.out_dir)?;
            println!(
                "wrote {} datasets under {}",
                paths.len(),
                cfg.out_dir.join("datasets").display()
            );
        }
        Command::Run(c) => {
            let cfg = load_config(&c)?;
            let table = cmd_run(&cfg, &cfg.out_dir).context("run failed")?;
            println!(
                "{} ausc rows, {} curve rows written to {}",
                table.ausc_rows().len(),
                table.curves().len(),
                cfg.out_dir.display()
            );
        }
        Command::Report(c) => {
            let cfg = load_config(&c)?;
            let out = cmd_report(&cfg, &cfg.out_dir)?;
            println!("{}", out.ausc_summary.display());
            for f in &out.curve_files {
                println!("{}", f.display());
            }
            for check in &out.checks {
                println!("{}", check.line());
            }
        }
        Command::Rank {
            common,
            input,
            effects,
        } => rank(&common, &input, effects.as_deref())?,
        Command::Verify(c) => {
            let cfg = load_config(&c)?;
            let checks = run_acceptance(&cfg)?;
            for check in &checks {
                println!("{}", check.line());
            }
            if checks.iter().any(|c| c.passed == Some(false)) {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
