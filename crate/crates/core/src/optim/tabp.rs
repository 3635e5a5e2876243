use serde::{Deserialize, Serialize};

use super::{AdamConfig, AdamState, OptimError, SearchOutcome, Tracer};
use crate::configuration::RisConfiguration;
use crate::ensemble::ScatteringMatrix;
use crate::models::{
    casc_channel, check_len, cost, loaded_st, loaded_system, mnt_channel, ChannelMatrix, EvalCounter,
};
use crate::numeric::{LuFactor, NumericError};

/// z, c̃, gradient and the two Adam moments.
const TABP_STORED_CONFIGS: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    Mnt,
    Casc,
}

impl Fidelity {
    pub fn channel(
        self,
        s: &ScatteringMatrix,
        loads: &[f64],
        counter: &EvalCounter,
    ) -> Result<ChannelMatrix, OptimError> {
        Ok(match self {
            Fidelity::Mnt => mnt_channel(s, loads, counter)?,
            Fidelity::Casc => casc_channel(s, loads, counter)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabpSchedule {
    pub t_start: f64,
    pub t_end: f64,
    pub e_max: usize,
    pub epsilon: f64,
    pub c_lo: f64,
    pub c_hi: f64,
}

impl Default for TabpSchedule {
    fn default() -> Self {
        Self {
            t_start: 1.0,
            t_end: 0.1,
            e_max: 400,
            epsilon: 1e-4,
            c_lo: -1.0,
            c_hi: 1.0,
        }
    }
}

impl TabpSchedule {
    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |m: &str| Err(OptimError::InvalidSchedule(m.to_string()));
        if !(self.t_end > 0.0 && self.t_end < self.t_start && self.t_start.is_finite()) {
            return bad("need 0 < t_end < t_start");
        }
        if self.e_max < 1 {
            return bad("e_max must be >= 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.c_lo != -1.0 || self.c_hi != 1.0 {
            return bad("binary loads must be c' = -1 and c'' = +1");
        }
        Ok(())
    }

    /// Temperature of epoch `e`: `t_start (t_end / t_start)^(e / e_max)`.
    pub fn temperature(&self, epoch: usize) -> f64 {
        self.t_start * (self.t_end / self.t_start).powf(epoch as f64 / self.e_max as f64)
    }

    fn initial_z(&self, c: &RisConfiguration) -> Vec<f64> {
        let span = self.c_hi - self.c_lo;
        c.loads()
            .iter()
            .map(|&ci| {
                self.t_start * ((1.0 - self.epsilon) * (2.0 * (ci - self.c_lo) / span - 1.0)).atanh()
            })
            .collect()
    }
}

/// `c̃ = c' + ½ (1 + tanh(z / t)) (c'' − c')`.
pub fn relaxed_loads(z: &[f64], t: f64, c_lo: f64, c_hi: f64) -> Vec<f64> {
    z.iter()
        .map(|&zi| c_lo + 0.5 * (1.0 + (zi / t).tanh()) * (c_hi - c_lo))
        .collect()
}

/// SISO cost `−|H|²` at relaxed loads and its gradient with respect to the
/// loads. Not counted as a model evaluation.
///
/// With `M̄ = (I − Φ S_SS)⁻¹`, `u = (S_RS M̄)ᵀ` and `v = (S_SS M̄ Φ + I) S_ST`,
/// `∂H/∂cᵢ = uᵢ vᵢ`, hence `∂C/∂cᵢ = −2 Re(conj(H) uᵢ vᵢ)`. For CASC
/// `u = S_RSᵀ` and `v = S_ST`.
pub fn cost_gradient(
    s: &ScatteringMatrix,
    fidelity: Fidelity,
    loads: &[f64],
) -> Result<(f64, Vec<f64>), OptimError> {
    let n = s.n_ris();
    check_len(n, loads.len())?;
    let (u, v, h) = match fidelity {
        Fidelity::Casc => {
            let h = casc_channel(s, loads, &EvalCounter::new())?;
            (s.s_rs().transpose(), s.s_st().clone(), h)
        }
        Fidelity::Mnt => {
            let num = |e: NumericError| OptimError::Model(e.into());
            let s_ss = s.s_ss();
            let lu = LuFactor::new(&loaded_system(s_ss, loads)).map_err(num)?;
            let y = lu.solve(&loaded_st(s.s_st(), loads)).map_err(num)?;
            let h = s.s_rt().add(&s.s_rs().matmul(&y).map_err(num)?).map_err(num)?;
            let v = s_ss.matmul(&y).and_then(|sy| sy.add(s.s_st())).map_err(num)?;
            let u = lu.solve_transpose(&s.s_rs().transpose()).map_err(num)?;
            (u, v, ChannelMatrix::new(h))
        }
    };
    let hv = h.siso_entry()?;
    let grad: Vec<f64> = (0..n)
        .map(|i| -2.0 * (hv.conj() * u[(i, 0)] * v[(i, 0)]).re)
        .collect();
    Ok((-hv.norm_sqr(), grad))
}

/// Cost at `c̃(z, t)` and its gradient with respect to `z`, using
/// `∂c̃ᵢ/∂zᵢ = ((c'' − c') / 2t) sech²(zᵢ / t)`. Not counted.
pub fn z_gradient(
    s: &ScatteringMatrix,
    fidelity: Fidelity,
    z: &[f64],
    t: f64,
    sched: &TabpSchedule,
) -> Result<(f64, Vec<f64>), OptimError> {
    let loads = relaxed_loads(z, t, sched.c_lo, sched.c_hi);
    let (c, dc) = cost_gradient(s, fidelity, &loads)?;
    let span = sched.c_hi - sched.c_lo;
    let g: Vec<f64> = dc
        .iter()
        .zip(z)
        .map(|(&d, &zi)| {
            let sech = 1.0 / (zi / t).cosh();
            d * span / (2.0 * t) * sech * sech
        })
        .collect();
    if let Some(index) = g.iter().position(|x| !x.is_finite()) {
        return Err(OptimError::NonFiniteGradient { index });
    }
    Ok((c, g))
}

/// Temperature-annealed back-propagation.
///
/// One evaluation before the loop and one per epoch `e = 1 .. e_max − 1`;
/// stops early when successive costs differ by at most `ε`. The final
/// configuration is the zero-temperature limit: `+1` where `z ≥ 0`, `−1`
/// where `z < 0`.
pub fn tabp(
    s: &ScatteringMatrix,
    fidelity: Fidelity,
    c_init: &RisConfiguration,
    sched: &TabpSchedule,
    adam: AdamConfig,
    counter: &EvalCounter,
) -> Result<SearchOutcome, OptimError> {
    sched.validate()?;
    check_len(s.n_ris(), c_init.len())?;
    let start = counter.get();
    let mut tracer = Tracer::new();
    let mut z = sched.initial_z(c_init);
    let mut adam = AdamState::new(z.len(), adam);

    let loads = relaxed_loads(&z, sched.t_start, sched.c_lo, sched.c_hi);
    let mut current = cost(&fidelity.channel(s, &loads, counter)?)?;
    tracer.record(current);

    let mut converged = false;
    for epoch in 1..sched.e_max {
        let t = sched.temperature(epoch);
        let loads = relaxed_loads(&z, t, sched.c_lo, sched.c_hi);
        let new = cost(&fidelity.channel(s, &loads, counter)?)?;
        tracer.record(new);
        if (new - current).abs() <= sched.epsilon {
            converged = true;
            break;
        }
        let (_, g) = z_gradient(s, fidelity, &z, t, sched)?;
        adam.step(&mut z, &g);
        current = new;
    }

    let signs: Vec<i8> = z.iter().map(|&zi| if zi >= 0.0 { 1 } else { -1 }).collect();
    let config = RisConfiguration::from_signs(signs).expect("non-empty binary signs");
    let final_cost = cost(&fidelity.channel(s, config.loads(), &EvalCounter::new())?)?;
    Ok(SearchOutcome {
        config,
        cost: final_cost,
        evaluations: counter.get() - start,
        peak_stored_configs: TABP_STORED_CONFIGS,
        trace: tracer.into_points(),
        converged,
    })
}
