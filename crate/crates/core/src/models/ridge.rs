use super::{check_len, AffineChannel, ChannelMatrix, EvalCounter, ModelError};
use crate::configuration::RisConfiguration;
use crate::numeric::{least_squares, ComplexMatrix, NumericError, C64};

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-3;

/// Ridge-regression affine surrogate `H(c) ≈ b + Σᵢ cᵢ wᵢ`, fitted per
/// channel entry. Only obtainable from [`fit_rr`] or
/// [`RrSurrogate::from_parts`], so an unfitted surrogate cannot exist.
#[derive(Debug, Clone, PartialEq)]
pub struct RrSurrogate {
    map: AffineChannel,
    lambda: f64,
}

impl RrSurrogate {
    pub fn from_parts(map: AffineChannel, lambda: f64) -> Self {
        Self { map, lambda }
    }

    pub fn map(&self) -> &AffineChannel {
        &self.map
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Minimizes `Σₘ |cₘᵀw + b − Hₘ|² + λ‖w‖²` for every channel entry at once,
/// with the intercept unpenalized.
///
/// Solved as the least-squares problem `[X 1; √λ I 0] [w; b] = [Y; 0]` by
/// Householder QR, which avoids squaring the condition number.
pub fn fit_rr(
    samples: &[(RisConfiguration, ChannelMatrix)],
    lambda: f64,
) -> Result<RrSurrogate, ModelError> {
    let (first_c, first_h) = samples.first().ok_or(ModelError::EmptyDataset)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ModelError::DegenerateDesign(format!("lambda {lambda} must be finite and >= 0")));
    }
    let n = first_c.len();
    let (n_rx, n_tx) = first_h.matrix().shape();
    let k = n_rx * n_tx;
    let m = samples.len();
    for (c, h) in samples {
        check_len(n, c.len())?;
        if h.matrix().shape() != (n_rx, n_tx) {
            return Err(ModelError::ShapeError("dictionary channels differ in shape".into()));
        }
    }
    let sqrt_lambda = lambda.sqrt();
    let design = ComplexMatrix::from_fn(m + n, n + 1, |row, col| {
        let v = if row < m {
            if col < n {
                samples[row].0.loads()[col]
            } else {
                1.0
            }
        } else if col == row - m {
            sqrt_lambda
        } else {
            0.0
        };
        C64::new(v, 0.0)
    });
    let rhs = ComplexMatrix::from_fn(m + n, k, |row, col| {
        if row < m {
            samples[row].1.matrix().as_slice()[col]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let theta = least_squares(&design, &rhs).map_err(|e| match e {
        NumericError::RankDeficient { column } => {
            ModelError::DegenerateDesign(format!("rank deficient at column {column}"))
        }
        other => other.into(),
    })?;
    let weights = theta.block(0..n, 0..k);
    let intercept = ComplexMatrix::new(n_rx, n_tx, theta.row(n).to_vec())?;
    Ok(RrSurrogate {
        map: AffineChannel::new(intercept, weights)?,
        lambda,
    })
}

/// Surrogate prediction `cᵀw + b`. Counts one evaluation.
pub fn rr_predict(
    sur: &RrSurrogate,
    config: &RisConfiguration,
    counter: &EvalCounter,
) -> Result<ChannelMatrix, ModelError> {
    let h = sur.map.evaluate(config.loads())?;
    counter.bump();
    Ok(h)
}
