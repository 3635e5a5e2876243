use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{anyhow, Context};
use clap::Args;

use mntris_core::harness::{
    plan, run_experiment, run_experiment_with_workers, write_outputs, ExperimentConfig, HarnessError,
};

use crate::error::{CliError, CliResult, Code};

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML experiment configuration; missing keys take the preset's values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base configuration: desk (32 elements, 200 realizations) or full
    /// (100 elements, 1500 realizations).
    #[arg(long, default_value = "desk")]
    pub preset: String,
    /// Override a configuration key, e.g. `n_realizations=20` or
    /// `output.dir="out"`. Applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads; 0 uses one per CPU.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Print the resolved configuration and cell counts, then exit.
    #[arg(long)]
    pub dry_run: bool,
    /// Suppress progress output on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

pub fn parse_assignment(item: &str) -> Result<(&str, &str), CliError> {
    item.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| CliError::config(anyhow!("expected KEY=VALUE, got {item:?}")))
}

/// Preset, then config file (merged key by key over the preset), then
/// `--set` overrides.
pub fn resolve_config(args: &SweepArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::preset(&args.preset).map_err(CliError::config)?;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(CliError::config)?;
        let table: toml::Table = text
            .parse()
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(CliError::config)?;
        for (key, value) in flatten(&table, "") {
            cfg.apply_override(&key, &value).map_err(CliError::config)?;
        }
    }
    for item in &args.overrides {
        let (key, value) = parse_assignment(item)?;
        cfg.apply_override(key, value).map_err(CliError::config)?;
    }
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg)
}

fn flatten(table: &toml::Table, prefix: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => out.extend(flatten(t, &key)),
            other => out.push((key, other.to_string())),
        }
    }
    out
}

fn harness_error(e: HarnessError) -> CliError {
    CliError::config(e)
}

fn print_plan(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let cells = plan(cfg);
    print!("{}", cfg.to_toml_string().map_err(harness_error)?);
    println!();
    for (k, mu) in cfg.mu_targets.iter().enumerate() {
        let n = cells.iter().filter(|c| c.0 == k).count();
        println!("# mu_target {mu}: {n} cells");
    }
    println!(
        "# total: {} cells over {} realizations",
        cells.len(),
        cfg.mu_targets.len() * cfg.n_realizations
    );
    Ok(())
}

pub fn run(args: SweepArgs) -> CliResult {
    let cfg = resolve_config(&args)?;
    if args.dry_run {
        return print_plan(&cfg);
    }
    let last_pct = AtomicUsize::new(0);
    let quiet = args.quiet;
    let progress = move |done: usize, total: usize| {
        if quiet || total == 0 {
            return;
        }
        let pct = done * 100 / total;
        if last_pct.fetch_max(pct, Ordering::Relaxed) < pct {
            eprintln!("{done}/{total} cells ({pct}%)");
        }
    };
    let output = if args.workers == 0 {
        run_experiment(&cfg, &progress)
    } else {
        run_experiment_with_workers(&cfg, args.workers, &progress)
    }
    .map_err(harness_error)?;
    for c in output.calibrations.iter().filter(|c| c.error.is_some()) {
        eprintln!(
            "warning: mu_target {} is not reachable: {}",
            c.mu_target,
            c.error.as_deref().unwrap_or_default()
        );
    }
    let paths = write_outputs(&cfg, &output).map_err(harness_error)?;
    println!("results:  {}", paths.results.display());
    println!("summary:  {}", paths.summary.display());
    println!("manifest: {}", paths.manifest.display());
    let errors = output.error_count();
    if errors > 0 {
        return Err(CliError::new(
            Code::ErroredCells,
            anyhow!("{errors} of {} cells errored", output.cells.len()),
        ));
    }
    Ok(())
}
