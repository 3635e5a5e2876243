use std::fs;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use mntris_core::ensemble::{draw_realization, mutual_coupling_strength, read_mnts, KappaCalibration, ScatteringMatrix};
use mntris_core::harness::ExperimentConfig;
use mntris_core::models::EvalCounter;
use mntris_core::optim::{build_dictionary, run_method, Method, OptimError, OptimizationReport, RunParams};
use mntris_core::rng::{derive_seed, streams};

use crate::error::{CliError, CliResult};
use crate::generate::{probe_seed, EnsembleArgs};
use crate::sweep::parse_assignment;

const METHOD_DOMAIN: u64 = 0x0b7;

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// ds, rr-cd, ga, or {mnt,casc}-{cd,tabp} with an optional
    /// :random/:ds/:rrcd initializer suffix.
    #[arg(long)]
    pub method: Method,
    /// Dictionary size.
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Read the scattering matrix from an MNTS file instead of drawing one.
    #[arg(long, conflicts_with_all = ["kappa", "target_mu"])]
    pub matrix: Option<PathBuf>,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Override an optimizer parameter, e.g. `tabp.e_max=100` or
    /// `rr_lambda=1e-2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Serialize)]
struct Output<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    method: Method,
    m: usize,
    seed: u64,
    matrix: Option<&'a PathBuf>,
    ensemble: Option<&'a EnsembleArgs>,
    calibration: Option<KappaCalibration>,
    n_ris: usize,
    kappa: f64,
    realized_mu: f64,
    params: RunParams,
    report: OptimizationReport,
}

fn load_matrix(path: &PathBuf) -> Result<ScatteringMatrix, CliError> {
    let f = fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(CliError::config)?;
    read_mnts(BufReader::new(f))
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::config)
}

fn run_params(overrides: &[String]) -> Result<RunParams, CliError> {
    let mut cfg = ExperimentConfig::default();
    for item in overrides {
        let (key, value) = parse_assignment(item)?;
        cfg.apply_override(key, value).map_err(CliError::config)?;
    }
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg.run_params())
}

pub fn run(args: OptimizeArgs) -> CliResult {
    let params = run_params(&args.overrides)?;
    let (s, calibration) = match &args.matrix {
        Some(path) => (load_matrix(path)?, None),
        None => {
            let (spec, calibration) = args.ensemble.resolve(args.seed)?;
            (draw_realization(&spec, 0).map_err(CliError::ensemble)?, calibration)
        }
    };
    let realized_mu = mutual_coupling_strength(&s, args.ensemble.n_probes, probe_seed(args.seed, 0))
        .map_err(CliError::ensemble)?;
    let dict = build_dictionary(
        &s,
        args.m,
        derive_seed(args.seed, &[streams::DICTIONARY]),
        &EvalCounter::new(),
    )
    .map_err(CliError::config)?;
    let report = run_method(&s, args.method, &dict, &params, derive_seed(args.seed, &[METHOD_DOMAIN]))
        .map_err(|e| match e {
            OptimError::NotApplicable { .. } | OptimError::InvalidSchedule(_) | OptimError::InvalidPopulation(_) => {
                CliError::config(e)
            }
            other => CliError::new(crate::error::Code::ValidationFailed, other),
        })?;
    let out = Output {
        tool: "mntris",
        version: env!("CARGO_PKG_VERSION"),
        command: "optimize",
        method: args.method,
        m: args.m,
        seed: args.seed,
        matrix: args.matrix.as_ref(),
        ensemble: args.matrix.is_none().then_some(&args.ensemble),
        calibration,
        n_ris: s.n_ris(),
        kappa: s.kappa(),
        realized_mu,
        params,
        report,
    };
    println!("{}", serde_json::to_string_pretty(&out).map_err(CliError::config)?);
    Ok(())
}
