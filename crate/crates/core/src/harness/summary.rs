use serde::{Deserialize, Serialize};

use super::{CellResult, ExperimentConfig};
use crate::optim::Method;

/// Mean and standard error of the mean (sample standard deviation over √n).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanStderr {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

impl MeanStderr {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { n, mean, stderr })
    }
}

/// Aggregate over the cells of one (μₙ target, method, M) key. Means are
/// over successful cells; error cells only count toward `n_errors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mu_target: f64,
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub n_errors: usize,
    pub realized_mu_mean: Option<f64>,
    pub realized_mu_stderr: Option<f64>,
    pub gain_mean: Option<f64>,
    pub gain_stderr: Option<f64>,
    pub model_evals_mean: Option<f64>,
    pub model_evals_stderr: Option<f64>,
    pub init_evals_mean: Option<f64>,
    pub convergence_evals_mean: Option<f64>,
    pub convergence_evals_stderr: Option<f64>,
    pub peak_configs_mean: Option<f64>,
    pub peak_configs_min: Option<u64>,
    pub peak_configs_max: Option<u64>,
    pub converged_fraction: Option<f64>,
}

fn summarize_key(mu_target: f64, method: Method, m: usize, cells: &[&CellResult]) -> SummaryRow {
    let ok: Vec<&CellResult> = cells.iter().copied().filter(|c| !c.is_error()).collect();
    let collect = |f: &dyn Fn(&CellResult) -> Option<f64>| -> Option<MeanStderr> {
        MeanStderr::of(&ok.iter().filter_map(|c| f(c)).collect::<Vec<_>>())
    };
    let mu = collect(&|c| c.realized_mu);
    let gain = collect(&|c| c.final_gain);
    let evals = collect(&|c| c.model_evals.map(|v| v as f64));
    let init = collect(&|c| c.init_evals.map(|v| v as f64));
    let conv = collect(&|c| c.convergence_evals().map(|v| v as f64));
    let peak = collect(&|c| c.peak_configs.map(|v| v as f64));
    let converged = collect(&|c| c.converged.map(|b| if b { 1.0 } else { 0.0 }));
    SummaryRow {
        mu_target,
        method,
        m,
        n: ok.len(),
        n_errors: cells.len() - ok.len(),
        realized_mu_mean: mu.map(|x| x.mean),
        realized_mu_stderr: mu.map(|x| x.stderr),
        gain_mean: gain.map(|x| x.mean),
        gain_stderr: gain.map(|x| x.stderr),
        model_evals_mean: evals.map(|x| x.mean),
        model_evals_stderr: evals.map(|x| x.stderr),
        init_evals_mean: init.map(|x| x.mean),
        convergence_evals_mean: conv.map(|x| x.mean),
        convergence_evals_stderr: conv.map(|x| x.stderr),
        peak_configs_mean: peak.map(|x| x.mean),
        peak_configs_min: ok.iter().filter_map(|c| c.peak_configs).min(),
        peak_configs_max: ok.iter().filter_map(|c| c.peak_configs).max(),
        converged_fraction: converged.map(|x| x.mean),
    }
}

/// One row per (μₙ target, method, M) key present in `results`, in order of
/// first appearance.
pub fn aggregate(results: &[CellResult]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, Method, usize)> = Vec::new();
    for c in results {
        let key = (c.mu_target, c.method, c.m);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(mu, method, m)| {
            let cells: Vec<&CellResult> = results
                .iter()
                .filter(|c| c.mu_target == mu && c.method == method && c.m == m)
                .collect();
            summarize_key(mu, method, m, &cells)
        })
        .collect()
}

/// One row for every (μₙ target, method, M) combination of the config,
/// including combinations with no cells (such as DS at `M = 0`).
pub fn summarize(cfg: &ExperimentConfig, results: &[CellResult]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &mu in &cfg.mu_targets {
        for &method in &cfg.methods {
            for &m in &cfg.m_values {
                let cells: Vec<&CellResult> = results
                    .iter()
                    .filter(|c| c.mu_target == mu && c.method == method && c.m == m)
                    .collect();
                rows.push(summarize_key(mu, method, m, &cells));
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(gain: f64, evals: u64) -> CellResult {
        CellResult {
            mu_target: 0.5,
            realized_mu: Some(0.48),
            m: 8,
            method: Method::Ds,
            realization: 0,
            final_gain: Some(gain),
            model_evals: Some(evals),
            init_evals: Some(0),
            peak_configs: Some(8),
            wall_time_us: Some(0),
            converged: Some(true),
            error: None,
        }
    }

    #[test]
    fn single_cell_has_zero_stderr() {
        let rows = aggregate(&[cell(2.5, 8)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].gain_mean, Some(2.5));
        assert_eq!(rows[0].gain_stderr, Some(0.0));
    }

    #[test]
    fn two_cells_average() {
        let rows = aggregate(&[cell(1.0, 8), cell(3.0, 8)]);
        assert_eq!(rows[0].gain_mean, Some(2.0));
        assert!((rows[0].gain_stderr.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rows[0].model_evals_mean, Some(8.0));
        assert_eq!(rows[0].model_evals_stderr, Some(0.0));
    }

    #[test]
    fn error_cells_are_excluded_and_counted() {
        let mut bad = cell(0.0, 0);
        bad.error = Some("boom".into());
        bad.final_gain = None;
        let rows = aggregate(&[cell(1.0, 8), bad]);
        assert_eq!(rows[0].n, 1);
        assert_eq!(rows[0].n_errors, 1);
        assert_eq!(rows[0].gain_mean, Some(1.0));
    }
}
