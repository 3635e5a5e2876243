use super::{check_len, ChannelMatrix, ChannelModel, EvalCounter, ModelError};
use crate::configuration::RisConfiguration;
use crate::ensemble::ScatteringMatrix;
use crate::numeric::{ComplexMatrix, C64};

/// Affine map `H(c) = B + Σᵢ cᵢ Wᵢ`.
///
/// `weights` row `i` holds `Wᵢ` flattened row-major, so its shape is
/// `N_S × (N_R·N_T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineChannel {
    intercept: ComplexMatrix,
    weights: ComplexMatrix,
}

impl AffineChannel {
    pub fn new(intercept: ComplexMatrix, weights: ComplexMatrix) -> Result<Self, ModelError> {
        let (r, t) = intercept.shape();
        if weights.cols() != r * t {
            return Err(ModelError::ShapeError(format!(
                "weights have {} columns, intercept is {r}x{t}",
                weights.cols()
            )));
        }
        Ok(Self { intercept, weights })
    }

    /// CASC coefficients: `B = S_RT`, `Wᵢ = S_RS[:, i] S_ST[i, :]`.
    pub fn from_casc(s: &ScatteringMatrix) -> Self {
        let rs = s.s_rs();
        let st = s.s_st();
        let (n_rx, n_tx) = s.s_rt().shape();
        let weights = ComplexMatrix::from_fn(s.n_ris(), n_rx * n_tx, |i, k| {
            rs[(k / n_tx, i)] * st[(i, k % n_tx)]
        });
        Self {
            intercept: s.s_rt().clone(),
            weights,
        }
    }

    pub fn n_ris(&self) -> usize {
        self.weights.rows()
    }

    pub fn intercept(&self) -> &ComplexMatrix {
        &self.intercept
    }

    pub fn weights(&self) -> &ComplexMatrix {
        &self.weights
    }

    /// Weight matrix `Wᵢ` of element `i`.
    pub fn weight(&self, i: usize) -> ComplexMatrix {
        let (r, t) = self.intercept.shape();
        ComplexMatrix::new(r, t, self.weights.row(i).to_vec()).expect("shape checked in new")
    }

    /// Evaluates the map at real loads (binary or relaxed). Not counted.
    pub fn evaluate(&self, loads: &[f64]) -> Result<ChannelMatrix, ModelError> {
        check_len(self.n_ris(), loads.len())?;
        let mut h = self.intercept.clone();
        for (i, &c) in loads.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (x, w) in h.as_mut_slice().iter_mut().zip(self.weights.row(i)) {
                *x += w * c;
            }
        }
        Ok(ChannelMatrix::new(h))
    }
}

/// CASC channel `H = S_RT + S_RS Φ S_ST`. Counts one evaluation.
pub fn casc_channel(
    s: &ScatteringMatrix,
    loads: &[f64],
    counter: &EvalCounter,
) -> Result<ChannelMatrix, ModelError> {
    check_len(s.n_ris(), loads.len())?;
    counter.bump();
    let rs = s.s_rs();
    let st = s.s_st();
    let (n_rx, n_tx) = s.s_rt().shape();
    let h = ComplexMatrix::from_fn(n_rx, n_tx, |r, t| {
        let mut acc = s.s_rt()[(r, t)];
        for (i, &c) in loads.iter().enumerate() {
            acc += rs[(r, i)] * st[(i, t)] * c;
        }
        acc
    });
    Ok(ChannelMatrix::new(h))
}

/// Stateful evaluator for an affine map (CASC or a ridge surrogate). A
/// single flip costs O(N_R N_T).
pub struct AffineModel {
    map: AffineChannel,
    counter: EvalCounter,
    current: Option<(RisConfiguration, ChannelMatrix)>,
    pending: Option<(usize, ChannelMatrix)>,
}

impl AffineModel {
    pub fn new(map: AffineChannel, counter: EvalCounter) -> Self {
        Self {
            map,
            counter,
            current: None,
            pending: None,
        }
    }

    pub fn map(&self) -> &AffineChannel {
        &self.map
    }
}

impl ChannelModel for AffineModel {
    fn n_ris(&self) -> usize {
        self.map.n_ris()
    }

    fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    fn reset(&mut self, config: &RisConfiguration) -> Result<ChannelMatrix, ModelError> {
        let h = self.map.evaluate(config.loads())?;
        self.counter.bump();
        self.current = Some((config.clone(), h.clone()));
        self.pending = None;
        Ok(h)
    }

    fn probe_flip(&mut self, i: usize) -> Result<ChannelMatrix, ModelError> {
        let (config, h) = self.current.as_ref().ok_or(ModelError::CacheInvalid)?;
        if i >= config.len() {
            return Err(ModelError::LengthMismatch {
                expected: config.len(),
                got: i + 1,
            });
        }
        self.counter.bump();
        let step = C64::new(-2.0 * config.loads()[i], 0.0);
        let mut next = h.matrix().clone();
        for (x, w) in next.as_mut_slice().iter_mut().zip(self.map.weights.row(i)) {
            *x += step * w;
        }
        let next = ChannelMatrix::new(next);
        self.pending = Some((i, next.clone()));
        Ok(next)
    }

    fn accept_flip(&mut self) -> Result<(), ModelError> {
        let (i, h) = self.pending.take().ok_or(ModelError::StaleCache)?;
        let current = self.current.as_mut().ok_or(ModelError::CacheInvalid)?;
        current.0.flip(i);
        current.1 = h;
        Ok(())
    }
}
