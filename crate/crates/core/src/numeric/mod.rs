//! Dense complex linear algebra used by every other module.
//!
//! The surface is intentionally small: a row-major [`ComplexMatrix`], LU with
//! partial pivoting, Householder least squares, the largest singular value by
//! power iteration on the Gram matrix, and the spectral radius via a shifted
//! Hessenberg QR iteration.

mod lstsq;
mod lu;
mod matrix;
mod spectral;

use thiserror::Error;

pub use lstsq::least_squares;
pub use lu::{solve_linear, LuFactor};
pub use matrix::{ComplexMatrix, C64};
pub use spectral::{eigenvalues, largest_singular_value, spectral_radius};

/// Numerical tolerances shared by production code and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative residual promised by [`solve_linear`] for well-conditioned systems.
    pub solve_relative: f64,
    /// Pivot magnitude below which a matrix is treated as singular.
    pub pivot_underflow: f64,
    /// Relative accuracy promised by [`largest_singular_value`].
    pub singular_value_relative: f64,
    /// Relative change of the Rayleigh quotient that ends the power iteration.
    pub power_iteration_step: f64,
    /// Iteration cap for the power iteration.
    pub power_iteration_max: usize,
    /// Relative accuracy promised by [`spectral_radius`].
    pub spectral_radius_relative: f64,
    /// QR sweeps allowed per eigenvalue before giving up.
    pub qr_sweeps_per_eigenvalue: usize,
    /// Smallest admissible |1 + δ W_ii| in a Sherman-Morrison flip.
    pub flip_breakdown: f64,
    /// Relative diagonal of R below which a least-squares design is rank deficient.
    pub rank_deficiency: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    solve_relative: 1e-10,
    pivot_underflow: 1e-300,
    singular_value_relative: 1e-8,
    power_iteration_step: 1e-14,
    power_iteration_max: 10_000,
    spectral_radius_relative: 1e-6,
    qr_sweeps_per_eigenvalue: 60,
    flip_breakdown: 1e-12,
    rank_deficiency: 1e-14,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular (pivot magnitude {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("{method} did not converge within {iterations} iterations")]
    ConvergenceFailure {
        method: &'static str,
        iterations: usize,
    },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("least-squares design is rank deficient at column {column}")]
    RankDeficient { column: usize },
}
