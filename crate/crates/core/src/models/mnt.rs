use super::{check_len, ChannelMatrix, ChannelModel, EvalCounter, ModelError};
use crate::configuration::RisConfiguration;
use crate::ensemble::ScatteringMatrix;
use crate::numeric::{solve_linear, ComplexMatrix, LuFactor, C64, TOLERANCES};

/// `I − Φ S_SS` for real loads `c`.
pub(crate) fn loaded_system(s_ss: &ComplexMatrix, loads: &[f64]) -> ComplexMatrix {
    let n = loads.len();
    ComplexMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        C64::new(delta, 0.0) - s_ss[(i, j)] * loads[i]
    })
}

/// Rows of `S_ST` scaled by the loads, i.e. `Φ S_ST`.
pub(crate) fn loaded_st(s_st: &ComplexMatrix, loads: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(s_st.rows(), s_st.cols(), |i, j| s_st[(i, j)] * loads[i])
}

/// Exact MNT channel `H = S_RT + S_RS (I − Φ S_SS)⁻¹ Φ S_ST`.
///
/// This form equals `S_RT + S_RS (Φ⁻¹ − S_SS)⁻¹ S_ST` whenever Φ is
/// invertible, and stays defined when some loads are zero.
pub fn mnt_channel(
    s: &ScatteringMatrix,
    loads: &[f64],
    counter: &EvalCounter,
) -> Result<ChannelMatrix, ModelError> {
    check_len(s.n_ris(), loads.len())?;
    counter.bump();
    let system = loaded_system(s.s_ss(), loads);
    let y = solve_linear(&system, &loaded_st(s.s_st(), loads))?;
    let h = s.s_rt().add(&s.s_rs().matmul(&y)?)?;
    Ok(ChannelMatrix::new(h))
}

/// MNT channel through `(Φ⁻¹ − S_SS)⁻¹`; needs every load to be non-zero.
/// Not counted as a model evaluation.
pub fn mnt_channel_eq1(s: &ScatteringMatrix, loads: &[f64]) -> Result<ChannelMatrix, ModelError> {
    check_len(s.n_ris(), loads.len())?;
    let w = eq1_inverse(s.s_ss(), loads)?;
    let h = s.s_rt().add(&s.s_rs().matmul(&w)?.matmul(s.s_st())?)?;
    Ok(ChannelMatrix::new(h))
}

fn eq1_inverse(s_ss: &ComplexMatrix, loads: &[f64]) -> Result<ComplexMatrix, ModelError> {
    let n = loads.len();
    let a = ComplexMatrix::from_fn(n, n, |i, j| {
        let phi_inv = if i == j { loads[i].recip() } else { 0.0 };
        C64::new(phi_inv, 0.0) - s_ss[(i, j)]
    });
    Ok(LuFactor::new(&a)?.inverse()?)
}

#[derive(Debug, Clone)]
struct MntState {
    config: RisConfiguration,
    // W = (Φ⁻¹ − S_SS)⁻¹
    w: ComplexMatrix,
    // S_RS W
    rs_w: ComplexMatrix,
    // W S_ST
    w_st: ComplexMatrix,
    channel: ChannelMatrix,
}

/// Data produced by [`MntEvaluator::flip_delta`] and consumed by
/// [`MntEvaluator::commit_flip`].
#[derive(Debug, Clone)]
pub struct FlipCache {
    index: usize,
    delta: f64,
    denominator: C64,
    // W eᵢ and eᵢᵀ W
    w_col: Vec<C64>,
    w_row: Vec<C64>,
    channel: ChannelMatrix,
    serial: u64,
}

impl FlipCache {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn channel(&self) -> &ChannelMatrix {
        &self.channel
    }
}

/// Exact MNT evaluator for binary configurations with O(N_S²) single-flip
/// updates.
///
/// Flipping element `i` changes `Φ⁻¹ − S_SS` by `δ eᵢeᵢᵀ` with
/// `δ = c_new − c_old` (binary loads are their own inverses), so
/// Sherman-Morrison gives
/// `ΔH = −δ (S_RS W eᵢ)(eᵢᵀ W S_ST) / (1 + δ Wᵢᵢ)`.
/// With `S_RS W` and `W S_ST` cached the channel of a flip costs
/// O(N_R N_T + N_S); committing it costs O(N_S²).
pub struct MntEvaluator<'a> {
    s: &'a ScatteringMatrix,
    counter: EvalCounter,
    state: Option<MntState>,
    serial: u64,
    pending: Option<FlipCache>,
    sign_fault: bool,
}

impl<'a> MntEvaluator<'a> {
    pub fn new(s: &'a ScatteringMatrix, counter: EvalCounter) -> Self {
        Self {
            s,
            counter,
            state: None,
            serial: 0,
            pending: None,
            sign_fault: false,
        }
    }

    /// Negates the rank-one correction of every flip. Only for exercising the
    /// self-check, which must then fail.
    #[doc(hidden)]
    pub fn inject_sign_fault(&mut self, on: bool) {
        self.sign_fault = on;
    }

    pub fn scattering(&self) -> &ScatteringMatrix {
        self.s
    }

    pub fn current_config(&self) -> Option<&RisConfiguration> {
        self.state.as_ref().map(|st| &st.config)
    }

    pub fn current_channel(&self) -> Option<&ChannelMatrix> {
        self.state.as_ref().map(|st| &st.channel)
    }

    /// Cached `(Φ⁻¹ − S_SS)⁻¹` for the current configuration.
    pub fn cached_inverse(&self) -> Option<&ComplexMatrix> {
        self.state.as_ref().map(|st| &st.w)
    }

    /// Full O(N_S³) evaluation that (re)builds the cache. Counts one evaluation.
    pub fn load(&mut self, config: &RisConfiguration) -> Result<ChannelMatrix, ModelError> {
        check_len(self.s.n_ris(), config.len())?;
        self.counter.bump();
        let w = eq1_inverse(self.s.s_ss(), config.loads())?;
        let rs_w = self.s.s_rs().matmul(&w)?;
        let w_st = w.matmul(self.s.s_st())?;
        let channel = ChannelMatrix::new(self.s.s_rt().add(&self.s.s_rs().matmul(&w_st)?)?);
        self.state = Some(MntState {
            config: config.clone(),
            w,
            rs_w,
            w_st,
            channel: channel.clone(),
        });
        self.serial += 1;
        self.pending = None;
        Ok(channel)
    }

    /// Channel after flipping element `i` of the cached configuration. Counts
    /// one evaluation.
    pub fn flip_delta(&mut self, i: usize) -> Result<(ChannelMatrix, FlipCache), ModelError> {
        let state = self.state.as_ref().ok_or(ModelError::CacheInvalid)?;
        let n = state.config.len();
        if i >= n {
            return Err(ModelError::LengthMismatch {
                expected: n,
                got: i + 1,
            });
        }
        self.counter.bump();
        let c_old = state.config.loads()[i];
        let delta = -2.0 * c_old;
        let denominator = C64::new(1.0, 0.0) + delta * state.w[(i, i)];
        if denominator.norm() < TOLERANCES.flip_breakdown {
            return Err(ModelError::NumericBreakdown {
                index: i,
                magnitude: denominator.norm(),
            });
        }
        let factor = if self.sign_fault {
            delta / denominator
        } else {
            -delta / denominator
        };
        let (n_rx, n_tx) = state.channel.matrix().shape();
        let h0 = state.channel.matrix();
        let h = ComplexMatrix::from_fn(n_rx, n_tx, |r, t| {
            h0[(r, t)] + factor * state.rs_w[(r, i)] * state.w_st[(i, t)]
        });
        self.serial += 1;
        let cache = FlipCache {
            index: i,
            delta,
            denominator,
            w_col: state.w.col_to_vec(i),
            w_row: state.w.row(i).to_vec(),
            channel: ChannelMatrix::new(h),
            serial: self.serial,
        };
        Ok((cache.channel.clone(), cache))
    }

    /// Applies the rank-one update of a flip produced by the most recent
    /// [`flip_delta`](Self::flip_delta).
    pub fn commit_flip(&mut self, cache: FlipCache) -> Result<(), ModelError> {
        if cache.serial != self.serial {
            return Err(ModelError::StaleCache);
        }
        let state = self.state.as_mut().ok_or(ModelError::CacheInvalid)?;
        let i = cache.index;
        let f = cache.delta / cache.denominator;
        let n = state.w.rows();
        for r in 0..n {
            let a = f * cache.w_col[r];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (x, b) in state.w.row_mut(r).iter_mut().zip(&cache.w_row) {
                *x -= a * b;
            }
        }
        for r in 0..state.rs_w.rows() {
            let a = f * state.rs_w[(r, i)];
            for (x, b) in state.rs_w.row_mut(r).iter_mut().zip(&cache.w_row) {
                *x -= a * b;
            }
        }
        let st_row: Vec<C64> = state.w_st.row(i).to_vec();
        for r in 0..n {
            let a = f * cache.w_col[r];
            for (x, b) in state.w_st.row_mut(r).iter_mut().zip(&st_row) {
                *x -= a * b;
            }
        }
        state.config.flip(i);
        state.channel = cache.channel;
        self.serial += 1;
        Ok(())
    }
}

impl ChannelModel for MntEvaluator<'_> {
    fn n_ris(&self) -> usize {
        self.s.n_ris()
    }

    fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    fn reset(&mut self, config: &RisConfiguration) -> Result<ChannelMatrix, ModelError> {
        self.load(config)
    }

    fn probe_flip(&mut self, i: usize) -> Result<ChannelMatrix, ModelError> {
        let (h, cache) = self.flip_delta(i)?;
        self.pending = Some(cache);
        Ok(h)
    }

    fn accept_flip(&mut self) -> Result<(), ModelError> {
        let cache = self.pending.take().ok_or(ModelError::StaleCache)?;
        self.commit_flip(cache)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{draw_scattering_matrix, EnsembleSpec, PortPartition};
    use crate::models::casc_channel;
    use crate::rng::stream_rng;

    fn sample(n_ris: usize, kappa: f64, seed: u64) -> ScatteringMatrix {
        draw_scattering_matrix(&EnsembleSpec::new(PortPartition::siso(n_ris).unwrap(), kappa, seed))
            .unwrap()
    }

    #[test]
    fn zero_ris_block_reduces_to_casc() {
        let s = sample(10, 1.0, 1).with_ris_block_zeroed().unwrap();
        let c = RisConfiguration::random(10, &mut stream_rng(2, 0));
        let counter = EvalCounter::new();
        let h = mnt_channel(&s, c.loads(), &counter).unwrap();
        let hc = casc_channel(&s, c.loads(), &counter).unwrap();
        assert_eq!(h, hc);
        assert_eq!(counter.get(), 2);
    }

    #[test]
    fn zero_loads_give_direct_path() {
        let s = sample(6, 1.0, 3);
        let h = mnt_channel(&s, &[0.0; 6], &EvalCounter::new()).unwrap();
        assert_eq!(h.matrix(), s.s_rt());
    }

    #[test]
    fn both_algebraic_forms_agree_on_binary_configs() {
        let s = sample(16, 1.0, 4);
        let mut rng = stream_rng(5, 0);
        for _ in 0..1000 {
            let c = RisConfiguration::random(16, &mut rng);
            let a = mnt_channel(&s, c.loads(), &EvalCounter::new()).unwrap();
            let b = mnt_channel_eq1(&s, c.loads()).unwrap();
            assert!(a.relative_error(&b) < 1e-10);
        }
    }

    #[test]
    fn flip_matches_full_recompute_and_is_an_involution() {
        let s = sample(12, 1.0, 6);
        let counter = EvalCounter::new();
        let mut ev = MntEvaluator::new(&s, counter.clone());
        let c0 = RisConfiguration::random(12, &mut stream_rng(7, 0));
        let h0 = ev.load(&c0).unwrap();
        for i in 0..12 {
            let (h, _) = ev.flip_delta(i).unwrap();
            let full = mnt_channel(&s, c0.flipped(i).loads(), &EvalCounter::new()).unwrap();
            assert!(h.relative_error(&full) < 1e-10);
        }
        let (_, cache) = ev.flip_delta(3).unwrap();
        ev.commit_flip(cache).unwrap();
        let (_, cache) = ev.flip_delta(3).unwrap();
        ev.commit_flip(cache).unwrap();
        assert_eq!(ev.current_config().unwrap(), &c0);
        assert!(ev.current_channel().unwrap().relative_error(&h0) < 1e-10);
        assert_eq!(counter.get(), 1 + 12 + 2);
    }

    #[test]
    fn committed_inverse_matches_scratch_after_many_flips() {
        let s = sample(20, 1.0, 8);
        let mut ev = MntEvaluator::new(&s, EvalCounter::new());
        let mut rng = stream_rng(9, 0);
        let c0 = RisConfiguration::random(20, &mut rng);
        ev.load(&c0).unwrap();
        let (_, cache) = ev.flip_delta(5).unwrap();
        ev.commit_flip(cache).unwrap();
        let scratch = eq1_inverse(s.s_ss(), ev.current_config().unwrap().loads()).unwrap();
        assert!(ev.cached_inverse().unwrap().relative_error(&scratch) < 1e-10);
        use rand::Rng;
        for _ in 0..100 {
            let i = rng.random_range(0..20);
            let (_, cache) = ev.flip_delta(i).unwrap();
            ev.commit_flip(cache).unwrap();
        }
        let config = ev.current_config().unwrap().clone();
        let scratch = eq1_inverse(s.s_ss(), config.loads()).unwrap();
        assert!(ev.cached_inverse().unwrap().relative_error(&scratch) < 1e-8);
        let full = mnt_channel(&s, config.loads(), &EvalCounter::new()).unwrap();
        assert!(ev.current_channel().unwrap().relative_error(&full) < 1e-8);
    }

    #[test]
    fn stale_and_missing_caches_are_rejected() {
        let s = sample(5, 1.0, 10);
        let mut ev = MntEvaluator::new(&s, EvalCounter::new());
        assert!(matches!(ev.flip_delta(0), Err(ModelError::CacheInvalid)));
        ev.load(&RisConfiguration::all_positive(5)).unwrap();
        let (_, first) = ev.flip_delta(0).unwrap();
        let (_, second) = ev.flip_delta(1).unwrap();
        assert!(matches!(ev.commit_flip(first), Err(ModelError::StaleCache)));
        ev.commit_flip(second.clone()).unwrap();
        assert!(matches!(ev.commit_flip(second), Err(ModelError::StaleCache)));
    }

    #[test]
    fn multiport_shapes_are_supported() {
        let p = PortPartition::new(2, 3, 6).unwrap();
        let s = draw_scattering_matrix(&EnsembleSpec::new(p, 1.0, 11)).unwrap();
        let c = RisConfiguration::random(6, &mut stream_rng(12, 0));
        let mut ev = MntEvaluator::new(&s, EvalCounter::new());
        ev.load(&c).unwrap();
        let (h, _) = ev.flip_delta(4).unwrap();
        assert_eq!(h.matrix().shape(), (3, 2));
        let full = mnt_channel(&s, c.flipped(4).loads(), &EvalCounter::new()).unwrap();
        assert!(h.relative_error(&full) < 1e-10);
    }
}
