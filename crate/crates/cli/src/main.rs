//! `wrg <experiment> --config path.json [key=value ...] --out dir`
//!
//! Exit status: 0 when every asserted tolerance holds, 2 on a tolerance
//! failure, 1 on a configuration error. `WRG_THREADS` caps the worker pool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, ValueEnum};
use serde_json::json;

use config::{Experiment, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(
    name = "wrg",
    version,
    about = "Wavelet renormalization experiments for the free scalar field"
)]
struct Cli {
    /// One of: filter_check, flow, two_point, dynamics, causality,
    /// hamiltonian, infinite_volume, poisson_defect.
    experiment: String,
    /// JSON config; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report directory (default: the config's `output`, else `wrg-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `key=value`; values are parsed as JSON when possible.
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("wrg: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let experiment = Experiment::from_str(&cli.experiment, false).map_err(|_| {
        anyhow!(
            "unknown experiment `{}`; valid names: {}",
            cli.experiment,
            Experiment::all_names().join(", ")
        )
    })?;
    if let Ok(n) = std::env::var("WRG_THREADS") {
        let n: usize = n.parse().with_context(|| format!("WRG_THREADS=`{n}` is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?.resolve(experiment)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.base.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("wrg-out"));
    let outcome = experiments::run(&cfg)?;
    write_reports(&out, &cfg, &outcome)?;
    println!(
        "{}: {} (reports in {})",
        experiment.name(),
        if outcome.pass { "pass" } else { "FAIL" },
        out.display()
    );
    Ok(outcome.pass)
}

fn write_reports(dir: &Path, cfg: &config::Resolved, outcome: &experiments::Outcome) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = cfg.experiment.name();
    // the only non-deterministic content lives in the header
    let started = SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs();
    let header = json!({
        "tool": "wrg",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": name,
        "unix_time": started,
    });
    let report = json!({
        "format": wrg_core::report::CSV_HEADER.trim_start_matches('#'),
        "experiment": name,
        "config": cfg.base,
        "filter": outcome.filter,
        "pass": outcome.pass,
        "summary": outcome.summary,
        "rows": outcome.rows,
    });
    std::fs::write(
        dir.join("run_header.json"),
        serde_json::to_string_pretty(&header)? + "\n",
    )?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    std::fs::write(dir.join(format!("{name}.csv")), &outcome.csv)?;
    Ok(())
}
