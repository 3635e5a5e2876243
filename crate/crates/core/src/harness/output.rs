use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{summarize, CellResult, ExperimentConfig, ExperimentOutput, HarnessError, MuCalibration, SummaryRow};

/// Header of the per-cell results file.
pub const RESULTS_HEADER: &str =
    "mu_target,realized_mu,m,method,realization,final_gain,model_evals,init_evals,peak_configs,wall_time_us,converged,error";

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: &'a ExperimentConfig,
    pub calibrations: &'a [MuCalibration],
    pub planned_cells: usize,
    pub error_cells: usize,
    pub results_file: String,
    pub summary_file: String,
}

pub fn write_results<W: Write>(w: W, cells: &[CellResult]) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    if cells.is_empty() {
        out.write_record(RESULTS_HEADER.split(','))?;
    }
    for c in cells {
        out.serialize(c)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results<R: std::io::Read>(r: R) -> Result<Vec<CellResult>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<Result<Vec<CellResult>, _>>()?)
}

pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub manifest: PathBuf,
}

/// Writes results CSV, summary CSV and the JSON manifest into
/// `cfg.output.dir`.
pub fn write_outputs(cfg: &ExperimentConfig, output: &ExperimentOutput) -> Result<OutputPaths, HarnessError> {
    let dir: &Path = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    let paths = OutputPaths {
        results: dir.join(&cfg.output.results_file),
        summary: dir.join(&cfg.output.summary_file),
        manifest: dir.join(&cfg.output.manifest_file),
    };
    write_results(fs::File::create(&paths.results)?, &output.cells)?;
    write_summary(fs::File::create(&paths.summary)?, &summarize(cfg, &output.cells))?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        calibrations: &output.calibrations,
        planned_cells: super::plan(cfg).len(),
        error_cells: output.error_count(),
        results_file: cfg.output.results_file.clone(),
        summary_file: cfg.output.summary_file.clone(),
    };
    let mut f = fs::File::create(&paths.manifest)?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    Ok(paths)
}
