//! Statistical realizations of the static scattering matrix S̃.
//!
//! Entries are circularly symmetric complex Gaussians; diagonal entries carry
//! twice the off-diagonal variance (coherent backscattering), the matrix is
//! symmetric by construction, everything is scaled by a global factor (1/15 by
//! default) and the off-diagonal entries of the RIS-RIS block are further
//! scaled by κ, which sets the mutual-coupling strength μₙ linearly.

mod coupling;
mod mnts;

use std::ops::Range;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{largest_singular_value, ComplexMatrix, NumericError, C64};
use crate::rng::{derive_seed, stream_rng, streams};

pub use coupling::{
    calibrate_kappa, calibrate_kappa_for, mutual_coupling_strength, mutual_coupling_with_probes, probe_configurations,
    validate_kappa, KappaCalibration, KappaVerdict, DEFAULT_CALIBRATION_DRAWS, DEFAULT_PROBE_COUNT,
};
pub use mnts::{read_mnts, write_mnts, MntsError, MNTS_MAGIC, MNTS_VERSION};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("invalid port partition: {0}")]
    InvalidPartition(String),
    #[error("invalid ensemble specification: {0}")]
    InvalidSpec(String),
    #[error("matrix is not reciprocal: S[{i},{j}] != S[{j},{i}]")]
    NotReciprocal { i: usize, j: usize },
    #[error("passivity violated: largest singular value {sigma_max} >= 1")]
    PassivityViolation { sigma_max: f64 },
    #[error(
        "target mu_n {target} needs kappa {kappa}, which is not passive: \
         {passed}/{trials} trial realizations passed, worst sigma_max {worst_sigma_max}"
    )]
    InfeasibleTarget {
        target: f64,
        kappa: f64,
        passed: usize,
        trials: usize,
        worst_sigma_max: f64,
    },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Port counts for transmitters, receivers and RIS elements; ports are
/// ordered `[T | R | S]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortPartition {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_ris: usize,
}

impl PortPartition {
    pub fn new(n_tx: usize, n_rx: usize, n_ris: usize) -> Result<Self, EnsembleError> {
        let p = Self { n_tx, n_rx, n_ris };
        p.validate()?;
        Ok(p)
    }

    pub fn siso(n_ris: usize) -> Result<Self, EnsembleError> {
        Self::new(1, 1, n_ris)
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.n_tx == 0 || self.n_rx == 0 || self.n_ris == 0 {
            return Err(EnsembleError::InvalidPartition(format!(
                "every port group needs at least one port, got T={} R={} S={}",
                self.n_tx, self.n_rx, self.n_ris
            )));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.n_tx + self.n_rx + self.n_ris
    }

    pub fn tx(&self) -> Range<usize> {
        0..self.n_tx
    }

    pub fn rx(&self) -> Range<usize> {
        self.n_tx..self.n_tx + self.n_rx
    }

    pub fn ris(&self) -> Range<usize> {
        self.n_tx + self.n_rx..self.total()
    }

    pub fn is_siso(&self) -> bool {
        self.n_tx == 1 && self.n_rx == 1
    }
}

#[derive(Debug, Clone)]
struct Blocks {
    rt: ComplexMatrix,
    rs: ComplexMatrix,
    st: ComplexMatrix,
    ss: ComplexMatrix,
    tt: ComplexMatrix,
    rr: ComplexMatrix,
}

/// A reciprocal, passive scattering matrix partitioned into port blocks.
#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    partition: PortPartition,
    matrix: ComplexMatrix,
    kappa: f64,
    sigma_max: f64,
    blocks: Blocks,
}

impl ScatteringMatrix {
    /// Validates shape, exact reciprocity and strict passivity.
    pub fn new(
        partition: PortPartition,
        matrix: ComplexMatrix,
        kappa: f64,
    ) -> Result<Self, EnsembleError> {
        partition.validate()?;
        let n = partition.total();
        if matrix.shape() != (n, n) {
            return Err(EnsembleError::InvalidSpec(format!(
                "matrix is {}x{}, partition needs {n}x{n}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(EnsembleError::NotReciprocal { i, j });
                }
            }
        }
        let sigma_max = largest_singular_value(&matrix)?;
        if !(sigma_max < 1.0) {
            return Err(EnsembleError::PassivityViolation { sigma_max });
        }
        let (t, r, s) = (partition.tx(), partition.rx(), partition.ris());
        let blocks = Blocks {
            rt: matrix.block(r.clone(), t.clone()),
            rs: matrix.block(r.clone(), s.clone()),
            st: matrix.block(s.clone(), t.clone()),
            ss: matrix.block(s.clone(), s),
            tt: matrix.block(t.clone(), t),
            rr: matrix.block(r.clone(), r),
        };
        Ok(Self {
            partition,
            matrix,
            kappa,
            sigma_max,
            blocks,
        })
    }

    pub fn partition(&self) -> PortPartition {
        self.partition
    }

    pub fn n_ris(&self) -> usize {
        self.partition.n_ris
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn s_rt(&self) -> &ComplexMatrix {
        &self.blocks.rt
    }

    pub fn s_rs(&self) -> &ComplexMatrix {
        &self.blocks.rs
    }

    pub fn s_st(&self) -> &ComplexMatrix {
        &self.blocks.st
    }

    pub fn s_ss(&self) -> &ComplexMatrix {
        &self.blocks.ss
    }

    pub fn s_tt(&self) -> &ComplexMatrix {
        &self.blocks.tt
    }

    pub fn s_rr(&self) -> &ComplexMatrix {
        &self.blocks.rr
    }

    /// Same matrix with the off-diagonal RIS-RIS entries multiplied by `factor`
    /// (κ is multiplied accordingly).
    pub fn with_ris_coupling_scaled(&self, factor: f64) -> Result<Self, EnsembleError> {
        let mut m = self.matrix.clone();
        scale_ris_coupling(&mut m, &self.partition, factor);
        Self::new(self.partition, m, self.kappa * factor)
    }

    /// Same matrix with the whole RIS-RIS block (diagonal included) set to zero.
    pub fn with_ris_block_zeroed(&self) -> Result<Self, EnsembleError> {
        let mut m = self.matrix.clone();
        let s = self.partition.ris();
        for i in s.clone() {
            for j in s.clone() {
                m[(i, j)] = C64::new(0.0, 0.0);
            }
        }
        Self::new(self.partition, m, 0.0)
    }
}

/// Generator parameters. `kappa` scales the off-diagonal RIS-RIS entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub partition: PortPartition,
    pub kappa: f64,
    pub global_scale: f64,
    pub offdiag_variance: f64,
    pub rng_seed: u64,
}

pub const DEFAULT_GLOBAL_SCALE: f64 = 1.0 / 15.0;
pub const DEFAULT_OFFDIAG_VARIANCE: f64 = 1.0;

impl EnsembleSpec {
    pub fn new(partition: PortPartition, kappa: f64, rng_seed: u64) -> Self {
        Self {
            partition,
            kappa,
            global_scale: DEFAULT_GLOBAL_SCALE,
            offdiag_variance: DEFAULT_OFFDIAG_VARIANCE,
            rng_seed,
        }
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        Self { kappa, ..self }
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self }
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        self.partition.validate()?;
        if !(self.global_scale > 0.0 && self.global_scale.is_finite()) {
            return Err(EnsembleError::InvalidSpec(format!(
                "global_scale must be positive, got {}",
                self.global_scale
            )));
        }
        if !(self.offdiag_variance > 0.0 && self.offdiag_variance.is_finite()) {
            return Err(EnsembleError::InvalidSpec(format!(
                "offdiag_variance must be positive, got {}",
                self.offdiag_variance
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(EnsembleError::InvalidSpec(format!(
                "kappa must be finite and non-negative, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

fn scale_ris_coupling(m: &mut ComplexMatrix, partition: &PortPartition, factor: f64) {
    let s = partition.ris();
    for i in s.clone() {
        for j in s.clone() {
            if i != j {
                m[(i, j)] *= factor;
            }
        }
    }
}

/// Draws the raw matrix without the passivity check.
///
/// Draw order: strictly upper triangle row-major (real then imaginary part of
/// each entry), then the diagonal. Upper entries are copied, not averaged,
/// into the lower triangle.
pub(crate) fn draw_raw(spec: &EnsembleSpec) -> ComplexMatrix {
    let n = spec.partition.total();
    let mut rng = stream_rng(spec.rng_seed, streams::MATRIX);
    let mut gaussian = || -> f64 { StandardNormal.sample(&mut rng) };
    // CN(0, v): independent real and imaginary parts with variance v/2
    let sd_off = (spec.offdiag_variance / 2.0).sqrt();
    let sd_diag = spec.offdiag_variance.sqrt();
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(sd_off * gaussian(), sd_off * gaussian());
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    for i in 0..n {
        m[(i, i)] = C64::new(sd_diag * gaussian(), sd_diag * gaussian());
    }
    for z in m.as_mut_slice() {
        *z *= spec.global_scale;
    }
    scale_ris_coupling(&mut m, &spec.partition, spec.kappa);
    m
}

/// One realization of S̃; fails with `PassivityViolation` when κ is too large
/// for this draw.
pub fn draw_scattering_matrix(spec: &EnsembleSpec) -> Result<ScatteringMatrix, EnsembleError> {
    spec.validate()?;
    ScatteringMatrix::new(spec.partition, draw_raw(spec), spec.kappa)
}

/// Realization `index` of the ensemble rooted at `spec.rng_seed`.
pub fn draw_realization(spec: &EnsembleSpec, index: u64) -> Result<ScatteringMatrix, EnsembleError> {
    draw_scattering_matrix(&spec.with_seed(derive_seed(spec.rng_seed, &[index])))
}
