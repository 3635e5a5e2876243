use super::mnt::loaded_st;
use super::{check_len, ChannelMatrix, ModelError};
use crate::ensemble::ScatteringMatrix;
use crate::numeric::ComplexMatrix;

/// Partial sum `S_RT + S_RS [Σₖ (Φ S_SS)ᵏ] Φ S_ST` with the Frobenius norm of
/// every channel term `S_RS (Φ S_SS)ᵏ Φ S_ST`.
#[derive(Debug, Clone)]
pub struct NeumannExpansion {
    pub channel: ChannelMatrix,
    pub term_norms: Vec<f64>,
}

impl NeumannExpansion {
    /// Number of terms summed (`k_max + 1`).
    pub fn terms(&self) -> usize {
        self.term_norms.len()
    }

    /// Geometric-mean decay rate over the last `window` terms,
    /// `(‖t_K‖ / ‖t_{K−window}‖)^{1/window}`.
    pub fn late_ratio(&self, window: usize) -> Option<f64> {
        let n = self.term_norms.len();
        if window == 0 || n <= window {
            return None;
        }
        let last = self.term_norms[n - 1];
        let first = self.term_norms[n - 1 - window];
        if first == 0.0 {
            return None;
        }
        Some((last / first).powf(1.0 / window as f64))
    }
}

fn expand(
    s: &ScatteringMatrix,
    loads: &[f64],
    mut keep_going: impl FnMut(usize, f64, &ComplexMatrix) -> bool,
) -> Result<NeumannExpansion, ModelError> {
    check_len(s.n_ris(), loads.len())?;
    let s_ss = s.s_ss();
    let mut x = loaded_st(s.s_st(), loads);
    let mut h = s.s_rt().clone();
    let mut term_norms = Vec::new();
    for k in 0.. {
        let term = s.s_rs().matmul(&x)?;
        let norm = term.frobenius_norm();
        h = h.add(&term)?;
        term_norms.push(norm);
        if !keep_going(k, norm, &h) {
            break;
        }
        // x ← Φ S_SS x
        let y = s_ss.matmul(&x)?;
        x = ComplexMatrix::from_fn(y.rows(), y.cols(), |i, j| y[(i, j)] * loads[i]);
    }
    Ok(NeumannExpansion {
        channel: ChannelMatrix::new(h),
        term_norms,
    })
}

/// Neumann partial sum through order `k_max`. Diagnostic only; not counted.
pub fn neumann_channel(
    s: &ScatteringMatrix,
    loads: &[f64],
    k_max: usize,
) -> Result<NeumannExpansion, ModelError> {
    expand(s, loads, |k, _, _| k < k_max)
}

/// Sums terms until one has `‖term‖_F ≤ rel_tol · ‖partial sum‖_F`, or
/// `k_cap` is reached.
pub fn neumann_until(
    s: &ScatteringMatrix,
    loads: &[f64],
    rel_tol: f64,
    k_cap: usize,
) -> Result<NeumannExpansion, ModelError> {
    expand(s, loads, |k, norm, h| k < k_cap && norm > rel_tol * h.frobenius_norm())
}
