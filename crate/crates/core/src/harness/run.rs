use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError};
use crate::ensemble::{
    calibrate_kappa_for, draw_scattering_matrix, mutual_coupling_strength, EnsembleError, EnsembleSpec,
};
use crate::models::EvalCounter;
use crate::optim::{build_dictionary, run_method, Method, OptimizationReport};
use crate::rng::{derive_seed, streams};

const CALIBRATION_DOMAIN: u64 = 0xca1b;

/// One (μₙ target, realization, M, method) run. Error cells keep their keys
/// and carry the message in `error`, with the numeric fields empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub mu_target: f64,
    pub realized_mu: Option<f64>,
    pub m: usize,
    pub method: Method,
    pub realization: u64,
    pub final_gain: Option<f64>,
    pub model_evals: Option<u64>,
    pub init_evals: Option<u64>,
    pub peak_configs: Option<u64>,
    pub wall_time_us: Option<u64>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

impl CellResult {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    /// Evaluations after initialization.
    pub fn convergence_evals(&self) -> Option<u64> {
        Some(self.model_evals? - self.init_evals?)
    }
}

/// κ calibration outcome for one μₙ target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuCalibration {
    pub mu_target: f64,
    pub kappa: f64,
    pub mean_mu_at_unit_kappa: Option<f64>,
    pub trials: usize,
    pub passed: usize,
    pub worst_sigma_max: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub calibrations: Vec<MuCalibration>,
    pub cells: Vec<CellResult>,
}

impl ExperimentOutput {
    pub fn error_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_error()).count()
    }
}

/// Every (μ index, realization, M, method) cell of the sweep, in output order.
pub fn plan(cfg: &ExperimentConfig) -> Vec<(usize, u64, usize, Method)> {
    let mut cells = Vec::new();
    for mu_idx in 0..cfg.mu_targets.len() {
        for r in 0..cfg.n_realizations as u64 {
            for &m in &cfg.m_values {
                for &method in &cfg.methods {
                    if method.applies_to(m) {
                        cells.push((mu_idx, r, m, method));
                    }
                }
            }
        }
    }
    cells
}

pub fn realization_seed(master_seed: u64, mu_idx: usize, realization: u64) -> u64 {
    derive_seed(master_seed, &[mu_idx as u64, realization])
}

fn method_seed(realization_seed: u64, m: usize, method: Method) -> u64 {
    // FNV-1a of the method name keeps seeds independent of list order
    let tag = method
        .to_string()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    derive_seed(realization_seed, &[m as u64, tag])
}

fn calibrate(cfg: &ExperimentConfig, mu_idx: usize) -> Result<MuCalibration, HarnessError> {
    let target = cfg.mu_targets[mu_idx];
    let seed = derive_seed(cfg.master_seed, &[CALIBRATION_DOMAIN, mu_idx as u64]);
    match calibrate_kappa_for(cfg.partition()?, target, seed, cfg.n_calib) {
        Ok(c) => Ok(MuCalibration {
            mu_target: target,
            kappa: c.kappa,
            mean_mu_at_unit_kappa: Some(c.mean_mu_at_unit_kappa),
            trials: c.verdict.trials,
            passed: c.verdict.passed,
            worst_sigma_max: c.verdict.worst_sigma_max,
            error: None,
        }),
        Err(e) => match &e {
            EnsembleError::InfeasibleTarget {
                kappa,
                passed,
                trials,
                worst_sigma_max,
                ..
            } => Ok(MuCalibration {
                mu_target: target,
                kappa: *kappa,
                mean_mu_at_unit_kappa: Some(target / kappa),
                trials: *trials,
                passed: *passed,
                worst_sigma_max: *worst_sigma_max,
                error: Some(e.to_string()),
            }),
            _ => Err(HarnessError::Config(e.to_string())),
        },
    }
}

fn error_cell(mu_target: f64, realized_mu: Option<f64>, m: usize, method: Method, r: u64, msg: String) -> CellResult {
    CellResult {
        mu_target,
        realized_mu,
        m,
        method,
        realization: r,
        final_gain: None,
        model_evals: None,
        init_evals: None,
        peak_configs: None,
        wall_time_us: None,
        converged: None,
        error: Some(msg),
    }
}

fn report_cell(
    cfg: &ExperimentConfig,
    mu_target: f64,
    realized_mu: f64,
    m: usize,
    method: Method,
    r: u64,
    report: OptimizationReport,
) -> CellResult {
    CellResult {
        mu_target,
        realized_mu: Some(realized_mu),
        m,
        method,
        realization: r,
        final_gain: Some(report.final_gain_mnt),
        model_evals: Some(report.model_evaluations),
        init_evals: Some(report.init_evaluations),
        peak_configs: Some(report.peak_stored_configs),
        wall_time_us: Some(if cfg.record_wall_time {
            report.wall_time.as_micros() as u64
        } else {
            0
        }),
        converged: Some(report.converged),
        error: None,
    }
}

/// All cells of one realization: one matrix and one dictionary shared by
/// every method and every M.
fn run_realization(
    cfg: &ExperimentConfig,
    calibration: &MuCalibration,
    mu_idx: usize,
    r: u64,
    done: &AtomicUsize,
    total: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Vec<CellResult> {
    let target = calibration.mu_target;
    let cells: Vec<(usize, Method)> = cfg
        .m_values
        .iter()
        .flat_map(|&m| cfg.methods.iter().filter(move |x| x.applies_to(m)).map(move |&x| (m, x)))
        .collect();
    let finish = |out: Vec<CellResult>| {
        let d = done.fetch_add(out.len(), Ordering::Relaxed) + out.len();
        progress(d, total);
        out
    };
    let fail_all = |realized: Option<f64>, msg: String| {
        cells
            .iter()
            .map(|&(m, x)| error_cell(target, realized, m, x, r, msg.clone()))
            .collect::<Vec<_>>()
    };
    if let Some(msg) = &calibration.error {
        return finish(fail_all(None, msg.clone()));
    }

    let seed = realization_seed(cfg.master_seed, mu_idx, r);
    let prepared = cfg
        .partition()
        .map_err(|e| e.to_string())
        .and_then(|p| {
            draw_scattering_matrix(&EnsembleSpec::new(p, calibration.kappa, seed)).map_err(|e| e.to_string())
        })
        .and_then(|s| {
            let mu = mutual_coupling_strength(&s, cfg.n_probes, derive_seed(seed, &[streams::PROBES]))
                .map_err(|e| e.to_string())?;
            let dict = build_dictionary(&s, cfg.max_m(), derive_seed(seed, &[streams::DICTIONARY]), &EvalCounter::new())
                .map_err(|e| e.to_string())?;
            Ok((s, mu, dict))
        });
    let (s, mu, dict) = match prepared {
        Ok(p) => p,
        Err(msg) => return finish(fail_all(None, msg)),
    };

    let params = cfg.run_params();
    let out = cells
        .iter()
        .map(|&(m, method)| {
            let prefix = dict.prefix(m);
            match run_method(&s, method, &prefix, &params, method_seed(seed, m, method)) {
                Ok(report) => report_cell(cfg, target, mu, m, method, r, report),
                Err(e) => error_cell(target, Some(mu), m, method, r, e.to_string()),
            }
        })
        .collect();
    finish(out)
}

/// Runs the sweep on the current rayon pool. Results come back in
/// [`plan`] order regardless of scheduling.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    let calibrations = (0..cfg.mu_targets.len())
        .map(|k| calibrate(cfg, k))
        .collect::<Result<Vec<_>, _>>()?;
    let total = plan(cfg).len();
    let done = AtomicUsize::new(0);
    let tasks: Vec<(usize, u64)> = (0..cfg.mu_targets.len())
        .flat_map(|k| (0..cfg.n_realizations as u64).map(move |r| (k, r)))
        .collect();
    let cells: Vec<CellResult> = tasks
        .par_iter()
        .map(|&(k, r)| run_realization(cfg, &calibrations[k], k, r, &done, total, progress))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(ExperimentOutput { calibrations, cells })
}

/// [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    cfg: &ExperimentConfig,
    workers: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<ExperimentOutput, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    pool.install(|| run_experiment(cfg, progress))
}
