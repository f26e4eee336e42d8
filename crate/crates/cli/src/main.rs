//! `fracground <experiment> --config <path> [--output-dir <path>] [--seed <int>]`
//!
//! Exit status: 0 when every executed verdict passes, 1 when one fails (the
//! first failure is named on stderr), 2 on configuration or runtime errors.
//! Records are written in every case once the config has loaded.

mod config;
mod experiments;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use fracground_core::Execution;

use crate::config::{load_config, Experiment};
use crate::record::{output_stem, to_json, with_suffix, write_atomic, RunRecord, Verdicts};

/// Caps the worker pool used for sweeps, multi-starts and probe batches.
const THREADS_ENV: &str = "FRACGROUND_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fracground", version, about = "Ground states of the semiclassical fractional Schrodinger equation")]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn execution() -> Result<Execution> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(Execution::Parallel);
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    if threads == 0 {
        anyhow::bail!("{THREADS_ENV} must be a positive integer, got 0");
    }
    if threads == 1 {
        return Ok(Execution::Sequential);
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(Execution::Parallel)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let exec = execution()?;
    let mut cfg = load_config(&cli.config)?;
    if let Some(dir) = cli.output_dir {
        cfg.output_dir = dir;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let resolved = cfg
        .resolve(cli.experiment)
        .with_context(|| format!("invalid config {}", cli.config.display()))?;

    let dir = resolved.config.output_dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = output_stem(&dir, cli.experiment.name());

    let start = Instant::now();
    let outcome = experiments::run(&resolved, exec);
    let wall_time_s = start.elapsed().as_secs_f64();

    let (results, verdicts, table, error) = match outcome {
        Ok(o) => (o.results, o.verdicts, o.table, None),
        Err(e) => {
            let mut v = Verdicts::default();
            v.push("completed", false, format!("{e:#}"));
            (serde_json::Value::Null, v, None, Some(format!("{e:#}")))
        }
    };
    let failed = verdicts.first_failed().map(|v| v.name);
    let rec = RunRecord {
        tool_version: env!("CARGO_PKG_VERSION"),
        experiment: cli.experiment.name(),
        config_echo: &resolved.config,
        wall_time_s,
        results,
        verdicts: &verdicts,
        verdict_details: verdicts.details(),
        first_failed: failed,
        error: error.clone(),
    };
    let record_path = with_suffix(&stem, ".record.json");
    if let Some(t) = &table {
        let table_path = with_suffix(&stem, ".sweep.tsv");
        write_atomic(&table_path, t.as_bytes())?;
        println!("table   {}", table_path.display());
    }
    write_atomic(&record_path, &to_json(&rec)?)?;
    println!("record  {}", record_path.display());

    for v in &verdicts.0 {
        println!("{:<4}  {:<28} {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    if let Some(e) = error {
        eprintln!("error: {e}");
        return Ok(ExitCode::from(2));
    }
    match verdicts.first_failed() {
        Some(v) => {
            eprintln!("verdict failed: {}", v.name);
            Ok(ExitCode::from(1))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
