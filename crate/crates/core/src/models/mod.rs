//! Configuration-to-channel maps at three fidelities: the exact MNT model, the
//! cascaded (CASC) affine approximation and a ridge-regression affine
//! surrogate, plus the Neumann-series expansion of the MNT inverse.

mod affine;
mod mnt;
mod neumann;
mod ridge;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::configuration::RisConfiguration;
use crate::numeric::{ComplexMatrix, NumericError, C64};

pub use affine::{casc_channel, AffineChannel, AffineModel};
pub use mnt::{mnt_channel, mnt_channel_eq1, FlipCache, MntEvaluator};
pub(crate) use mnt::{loaded_st, loaded_system};
pub use neumann::{neumann_channel, neumann_until, NeumannExpansion};
pub use ridge::{fit_rr, rr_predict, RrSurrogate, DEFAULT_RIDGE_LAMBDA};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("configuration has {got} elements, model has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("evaluator has no cached configuration")]
    CacheInvalid,
    #[error("flip cache is stale: another flip was evaluated or committed since")]
    StaleCache,
    #[error("Sherman-Morrison breakdown at element {index}: |1 + delta W_ii| = {magnitude:e}")]
    NumericBreakdown { index: usize, magnitude: f64 },
    #[error("degenerate ridge-regression design: {0}")]
    DegenerateDesign(String),
    #[error("ridge regression needs at least one sample")]
    EmptyDataset,
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Shared count of channel-model evaluations. Clones share the same count.
#[derive(Debug, Clone, Default)]
pub struct EvalCounter(Arc<AtomicU64>);

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// End-to-end channel `H` (`N_R × N_T`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix(ComplexMatrix);

impl ChannelMatrix {
    pub fn new(h: ComplexMatrix) -> Self {
        Self(h)
    }

    pub fn siso(h: C64) -> Self {
        Self(ComplexMatrix::scalar(h))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// The single entry of a 1×1 channel.
    pub fn siso_entry(&self) -> Result<C64, ModelError> {
        match self.0.shape() {
            (1, 1) => Ok(self.0[(0, 0)]),
            (r, t) => Err(ModelError::ShapeError(format!(
                "SISO gain needs a 1x1 channel, got {r}x{t}"
            ))),
        }
    }

    pub fn relative_error(&self, other: &Self) -> f64 {
        self.0.relative_error(&other.0)
    }
}

/// SISO channel gain `|H|²`.
pub fn channel_gain(h: &ChannelMatrix) -> Result<f64, ModelError> {
    Ok(h.siso_entry()?.norm_sqr())
}

/// Optimization cost `C(H) = −|H|²`.
pub fn cost(h: &ChannelMatrix) -> Result<f64, ModelError> {
    Ok(-channel_gain(h)?)
}

/// Stateful evaluator used by coordinate descent: it tracks a current
/// configuration and answers single-flip queries.
pub trait ChannelModel {
    fn n_ris(&self) -> usize;

    fn counter(&self) -> &EvalCounter;

    /// Evaluates `config` and makes it current.
    fn reset(&mut self, config: &RisConfiguration) -> Result<ChannelMatrix, ModelError>;

    /// Channel of the current configuration with element `i` flipped. The
    /// current configuration is unchanged until [`accept_flip`](Self::accept_flip).
    fn probe_flip(&mut self, i: usize) -> Result<ChannelMatrix, ModelError>;

    /// Makes the most recently probed flip current.
    fn accept_flip(&mut self) -> Result<(), ModelError>;
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<(), ModelError> {
    if expected != got {
        return Err(ModelError::LengthMismatch { expected, got });
    }
    Ok(())
}
