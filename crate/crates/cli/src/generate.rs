use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use mntris_core::ensemble::{
    calibrate_kappa, draw_realization, mutual_coupling_strength, write_mnts, EnsembleSpec, KappaCalibration,
    PortPartition, ScatteringMatrix, DEFAULT_CALIBRATION_DRAWS, DEFAULT_PROBE_COUNT,
};
use mntris_core::rng::{derive_seed, streams};

use crate::error::{CliError, CliResult};

const CALIBRATION_DOMAIN: u64 = 0xca1b;

/// Ensemble parameters shared by `generate` and `optimize`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct EnsembleArgs {
    #[arg(long, default_value_t = 1)]
    pub n_tx: usize,
    #[arg(long, default_value_t = 1)]
    pub n_rx: usize,
    #[arg(long, default_value_t = 32)]
    pub n_ris: usize,
    /// Off-diagonal RIS-RIS coupling scale.
    #[arg(long, conflicts_with = "target_mu")]
    pub kappa: Option<f64>,
    /// Calibrate κ so the ensemble-mean μₙ hits this value.
    #[arg(long)]
    pub target_mu: Option<f64>,
    /// Realizations drawn to calibrate and check κ.
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_DRAWS)]
    pub n_calib: usize,
    /// Random configurations averaged into each μₙ.
    #[arg(long, default_value_t = DEFAULT_PROBE_COUNT)]
    pub n_probes: usize,
}

impl EnsembleArgs {
    /// Resolves κ (calibrating it when a target μₙ is given) into a spec
    /// rooted at `seed`.
    pub fn resolve(&self, seed: u64) -> Result<(EnsembleSpec, Option<KappaCalibration>), CliError> {
        let partition = PortPartition::new(self.n_tx, self.n_rx, self.n_ris).map_err(CliError::ensemble)?;
        let base = EnsembleSpec::new(partition, 1.0, seed);
        match (self.kappa, self.target_mu) {
            (Some(kappa), None) => {
                let spec = base.with_kappa(kappa);
                spec.validate().map_err(CliError::ensemble)?;
                Ok((spec, None))
            }
            (None, Some(target)) => {
                let calib_base = base.with_seed(derive_seed(seed, &[CALIBRATION_DOMAIN]));
                let c = calibrate_kappa(&calib_base, target, self.n_calib).map_err(CliError::ensemble)?;
                Ok((base.with_kappa(c.kappa), Some(c)))
            }
            _ => Err(CliError::config(anyhow::anyhow!("one of --kappa or --target-mu is required"))),
        }
    }
}

/// Probe seed for realization `index`, matching the matrix seed used by
/// `draw_realization`.
pub fn probe_seed(root_seed: u64, index: u64) -> u64 {
    derive_seed(derive_seed(root_seed, &[index]), &[streams::PROBES])
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    /// Number of realizations.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "generated")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ReportRow {
    index: u64,
    file: String,
    kappa: f64,
    realized_mu: f64,
    sigma_max: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    args: &'a GenerateArgs,
    kappa: f64,
    calibration: Option<KappaCalibration>,
    files: Vec<String>,
    report: &'static str,
}

pub fn run(args: GenerateArgs) -> CliResult {
    let (spec, calibration) = args.ensemble.resolve(args.seed)?;
    // draw everything first so a passivity failure leaves no partial output
    let realizations: Vec<ScatteringMatrix> = (0..args.count)
        .map(|i| draw_realization(&spec, i))
        .collect::<Result<_, _>>()
        .map_err(CliError::ensemble)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(CliError::config)?;
    let mut rows = Vec::with_capacity(realizations.len());
    for (i, s) in (0u64..).zip(&realizations) {
        let file = format!("s_{i:05}.mnts");
        let path = args.out.join(&file);
        let f = fs::File::create(&path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(CliError::config)?;
        write_mnts(BufWriter::new(f), s).map_err(CliError::config)?;
        let mu = mutual_coupling_strength(s, args.ensemble.n_probes, probe_seed(args.seed, i))
            .map_err(CliError::ensemble)?;
        rows.push(ReportRow {
            index: i,
            file,
            kappa: s.kappa(),
            realized_mu: mu,
            sigma_max: s.sigma_max(),
        });
    }

    let report_path = args.out.join("report.csv");
    let mut w = csv::Writer::from_path(&report_path).map_err(CliError::config)?;
    for row in &rows {
        w.serialize(row).map_err(CliError::config)?;
    }
    w.flush().map_err(CliError::config)?;

    let manifest = Manifest {
        tool: "mntris",
        version: env!("CARGO_PKG_VERSION"),
        command: "generate",
        args: &args,
        kappa: spec.kappa,
        calibration,
        files: rows.iter().map(|r| r.file.clone()).collect(),
        report: "report.csv",
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(CliError::config)?;
    fs::write(args.out.join("manifest.json"), text + "\n").map_err(CliError::config)?;

    println!(
        "wrote {} realizations (kappa = {}) to {}",
        rows.len(),
        spec.kappa,
        args.out.display()
    );
    Ok(())
}
