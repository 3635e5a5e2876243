use serde::{Deserialize, Serialize};

use super::{draw_raw, EnsembleError, EnsembleSpec, PortPartition, ScatteringMatrix};
use crate::configuration::RisConfiguration;
use crate::numeric::{largest_singular_value, ComplexMatrix, C64};
use crate::rng::{derive_seed, stream_rng, streams};

pub const DEFAULT_PROBE_COUNT: usize = 100;
pub const DEFAULT_CALIBRATION_DRAWS: usize = 200;

const CALIBRATION_DOMAIN: u64 = 0xca11;
const VALIDATION_DOMAIN: u64 = 0x7a11;

/// Probe configurations used to average μₙ, drawn from their own stream.
pub fn probe_configurations(n_ris: usize, count: usize, rng_seed: u64) -> Vec<RisConfiguration> {
    let mut rng = stream_rng(rng_seed, streams::PROBES);
    (0..count)
        .map(|_| RisConfiguration::random(n_ris, &mut rng))
        .collect()
}

fn offdiag_norm(s_ss: &ComplexMatrix) -> Result<f64, EnsembleError> {
    let mut off = s_ss.clone();
    for i in 0..off.rows() {
        off[(i, i)] = C64::new(0.0, 0.0);
    }
    Ok(largest_singular_value(&off)?)
}

fn mu_from_block(s_ss: &ComplexMatrix, probes: &[RisConfiguration]) -> Result<f64, EnsembleError> {
    if probes.is_empty() {
        return Err(EnsembleError::InvalidSpec("mu_n needs at least one probe".into()));
    }
    let numerator = offdiag_norm(s_ss)?;
    let diag = s_ss.diagonal();
    let mut total = 0.0;
    for c in probes {
        if c.len() != diag.len() {
            return Err(EnsembleError::InvalidSpec(format!(
                "probe has {} elements, RIS has {}",
                c.len(),
                diag.len()
            )));
        }
        // Φ⁻¹ − diag(S_SS) is diagonal, so its spectral norm is the largest
        // entry magnitude; 1/cᵢ = cᵢ for binary loads.
        let denominator = c
            .loads()
            .iter()
            .zip(&diag)
            .map(|(ci, di)| (C64::new(*ci, 0.0) - di).norm())
            .fold(0.0, f64::max);
        total += numerator / denominator;
    }
    Ok(total / probes.len() as f64)
}

/// μₙ averaged over the given probe configurations.
pub fn mutual_coupling_with_probes(
    s: &ScatteringMatrix,
    probes: &[RisConfiguration],
) -> Result<f64, EnsembleError> {
    mu_from_block(s.s_ss(), probes)
}

/// μₙ = ⟨‖S_SS − diag(S_SS)‖₂ / ‖Φ⁻¹ − diag(S_SS)‖₂⟩ over `n_probe_configs`
/// uniformly random binary configurations, with ‖·‖₂ the spectral norm.
pub fn mutual_coupling_strength(
    s: &ScatteringMatrix,
    n_probe_configs: usize,
    rng_seed: u64,
) -> Result<f64, EnsembleError> {
    let probes = probe_configurations(s.n_ris(), n_probe_configs, rng_seed);
    mutual_coupling_with_probes(s, &probes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaVerdict {
    pub kappa: f64,
    pub trials: usize,
    pub passed: usize,
    pub pass_fraction: f64,
    pub worst_sigma_max: f64,
    /// True when every trial realization was passive.
    pub feasible: bool,
}

/// Draws `n_trials` realizations at `kappa` and reports how many are passive.
pub fn validate_kappa(
    base: &EnsembleSpec,
    kappa: f64,
    n_trials: usize,
) -> Result<KappaVerdict, EnsembleError> {
    let spec = base.with_kappa(kappa);
    spec.validate()?;
    let mut passed = 0;
    let mut worst = 0.0f64;
    for t in 0..n_trials {
        let trial = spec.with_seed(derive_seed(base.rng_seed, &[VALIDATION_DOMAIN, t as u64]));
        let sigma = largest_singular_value(&draw_raw(&trial))?;
        worst = worst.max(sigma);
        if sigma < 1.0 {
            passed += 1;
        }
    }
    Ok(KappaVerdict {
        kappa,
        trials: n_trials,
        passed,
        pass_fraction: if n_trials == 0 {
            1.0
        } else {
            passed as f64 / n_trials as f64
        },
        worst_sigma_max: worst,
        feasible: passed == n_trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaCalibration {
    pub target_mu: f64,
    pub kappa: f64,
    /// Mean μₙ of the calibration draws at κ = 1.
    pub mean_mu_at_unit_kappa: f64,
    pub verdict: KappaVerdict,
}

/// Mean μₙ over `n_calib` raw draws at κ = 1. Passivity is not required here:
/// μₙ is linear in κ, so only the scaled matrices need to be passive.
pub(crate) fn mean_mu_at_unit_kappa(
    base: &EnsembleSpec,
    n_calib: usize,
    n_probe_configs: usize,
) -> Result<f64, EnsembleError> {
    let unit = base.with_kappa(1.0);
    let n_ris = base.partition.n_ris;
    let mut total = 0.0;
    for t in 0..n_calib {
        let seed = derive_seed(base.rng_seed, &[CALIBRATION_DOMAIN, t as u64]);
        let m = draw_raw(&unit.with_seed(seed));
        let s = base.partition.ris();
        let s_ss = m.block(s.clone(), s);
        let probes = probe_configurations(n_ris, n_probe_configs, seed);
        total += mu_from_block(&s_ss, &probes)?;
    }
    Ok(total / n_calib as f64)
}

/// One-point calibration κ* = target / mean μₙ(κ = 1), checked for passivity
/// over `n_calib` fresh realizations.
pub fn calibrate_kappa(
    base: &EnsembleSpec,
    target_mu: f64,
    n_calib: usize,
) -> Result<KappaCalibration, EnsembleError> {
    base.with_kappa(1.0).validate()?;
    if !(target_mu > 0.0 && target_mu.is_finite()) {
        return Err(EnsembleError::InvalidSpec(format!(
            "target mu_n must be positive, got {target_mu}"
        )));
    }
    if n_calib == 0 {
        return Err(EnsembleError::InvalidSpec("n_calib must be at least 1".into()));
    }
    let mean = mean_mu_at_unit_kappa(base, n_calib, DEFAULT_PROBE_COUNT)?;
    let kappa = target_mu / mean;
    let verdict = validate_kappa(base, kappa, n_calib)?;
    if !verdict.feasible {
        return Err(EnsembleError::InfeasibleTarget {
            target: target_mu,
            kappa,
            passed: verdict.passed,
            trials: verdict.trials,
            worst_sigma_max: verdict.worst_sigma_max,
        });
    }
    Ok(KappaCalibration {
        target_mu,
        kappa,
        mean_mu_at_unit_kappa: mean,
        verdict,
    })
}

/// Helper for callers holding only a partition.
pub fn calibrate_kappa_for(
    partition: PortPartition,
    target_mu: f64,
    rng_seed: u64,
    n_calib: usize,
) -> Result<KappaCalibration, EnsembleError> {
    calibrate_kappa(&EnsembleSpec::new(partition, 1.0, rng_seed), target_mu, n_calib)
}
