//! Self-checks run by `mntris validate`: each one compares a fast path with
//! an independent reference at small sizes and reports the observed error
//! next to its bound.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::configuration::RisConfiguration;
use crate::ensemble::{
    draw_realization, mutual_coupling_strength, EnsembleError, EnsembleSpec, PortPartition, ScatteringMatrix,
};
use crate::models::{cost, mnt_channel, neumann_channel, neumann_until, EvalCounter, MntEvaluator};
use crate::numeric::{spectral_radius, ComplexMatrix};
use crate::optim::{relaxed_loads, z_gradient, Fidelity, TabpSchedule};
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    /// Single-flip updates against full recomputation.
    Woodbury,
    /// Analytic relaxed-cost gradient against central differences.
    Gradient,
    /// Series partial sums against the closed form, and their decay rate.
    Neumann,
    /// Generator variances, symmetry and passivity.
    Variance,
    /// μₙ doubles when the RIS-RIS coupling doubles.
    Linearity,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::Woodbury,
        Check::Gradient,
        Check::Neumann,
        Check::Variance,
        Check::Linearity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Woodbury => "woodbury",
            Check::Gradient => "gradient",
            Check::Neumann => "neumann",
            Check::Variance => "variance",
            Check::Linearity => "linearity",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Check::ALL.iter().map(|c| c.name()).collect();
                format!("unknown check {s:?}; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    Within(f64, f64),
    Exactly(f64),
}

impl Bound {
    pub fn holds(self, x: f64) -> bool {
        match self {
            Bound::AtMost(b) => x <= b,
            Bound::Within(lo, hi) => (lo..=hi).contains(&x),
            Bound::Exactly(v) => x == v,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<= {b:e}"),
            Bound::Within(lo, hi) => write!(f, "in [{lo}, {hi}]"),
            Bound::Exactly(v) => write!(f, "== {v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub observed: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Measurement {
    fn new(label: &str, observed: f64, bound: Bound) -> Self {
        Self {
            label: label.into(),
            observed,
            bound,
            passed: bound.holds(observed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: Check,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    /// Set when the check could not run to completion.
    pub error: Option<String>,
}

impl CheckReport {
    fn from_measurements(check: Check, measurements: Vec<Measurement>) -> Self {
        Self {
            check,
            passed: measurements.iter().all(|m| m.passed),
            measurements,
            error: None,
        }
    }

    fn failed(check: Check, error: String) -> Self {
        Self {
            check,
            passed: false,
            measurements: Vec::new(),
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub seed: u64,
    /// Runs the flip check with the sign of the rank-one correction negated.
    pub inject_flip_fault: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            inject_flip_fault: false,
        }
    }
}

type CheckResult = Result<Vec<Measurement>, String>;

fn ensemble(n_ris: usize, kappa: f64, seed: u64) -> Result<EnsembleSpec, String> {
    let p = PortPartition::siso(n_ris).map_err(|e| e.to_string())?;
    Ok(EnsembleSpec::new(p, kappa, seed))
}

fn realization(spec: &EnsembleSpec, index: u64) -> Result<ScatteringMatrix, String> {
    draw_realization(spec, index).map_err(|e| e.to_string())
}

fn woodbury(opts: &ValidationOptions) -> CheckResult {
    let spec = ensemble(16, 1.0, opts.seed)?;
    let mut worst = 0.0f64;
    let mut flips = 0usize;
    for r in 0..10 {
        let s = realization(&spec, r)?;
        let mut rng = stream_rng(derive_seed(opts.seed, &[r]), 1);
        let counter = EvalCounter::new();
        let mut eval = MntEvaluator::new(&s, counter.clone());
        eval.inject_sign_fault(opts.inject_flip_fault);
        let mut config = RisConfiguration::random(16, &mut rng);
        eval.load(&config).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let i = rng.random_range(0..16);
            let (h, cache) = eval.flip_delta(i).map_err(|e| e.to_string())?;
            config.flip(i);
            let full = mnt_channel(&s, config.loads(), &counter).map_err(|e| e.to_string())?;
            worst = worst.max(h.matrix().relative_error(full.matrix()));
            eval.commit_flip(cache).map_err(|e| e.to_string())?;
            flips += 1;
        }
    }
    Ok(vec![
        Measurement::new("max relative channel error", worst, Bound::AtMost(1e-8)),
        Measurement::new("flips compared", flips as f64, Bound::Exactly(1000.0)),
    ])
}

fn gradient(opts: &ValidationOptions) -> CheckResult {
    const STEP: f64 = 1e-6;
    let n = 8;
    let spec = ensemble(n, 1.0, opts.seed)?;
    let sched = TabpSchedule::default();
    let mut worst = 0.0f64;
    for r in 0..20 {
        let s = realization(&spec, r)?;
        let mut rng = stream_rng(derive_seed(opts.seed, &[r]), 2);
        let t: f64 = rng.random_range(0.1..1.0);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0) * t).collect();
        for fidelity in [Fidelity::Mnt, Fidelity::Casc] {
            let (_, g) = z_gradient(&s, fidelity, &z, t, &sched).map_err(|e| e.to_string())?;
            let relaxed_cost = |z: &[f64]| -> Result<f64, String> {
                let loads = relaxed_loads(z, t, sched.c_lo, sched.c_hi);
                let h = fidelity.channel(&s, &loads, &EvalCounter::new()).map_err(|e| e.to_string())?;
                cost(&h).map_err(|e| e.to_string())
            };
            let scale = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            for i in 0..n {
                let mut plus = z.clone();
                let mut minus = z.clone();
                plus[i] += STEP;
                minus[i] -= STEP;
                let fd = (relaxed_cost(&plus)? - relaxed_cost(&minus)?) / (2.0 * STEP);
                // the floor keeps coordinates with a vanishing derivative from
                // turning rounding noise into a huge relative error
                let err = (g[i] - fd).abs() / fd.abs().max(1e-6 * scale);
                worst = worst.max(err);
            }
        }
    }
    Ok(vec![Measurement::new(
        "max per-coordinate relative error",
        worst,
        Bound::AtMost(1e-5),
    )])
}

fn neumann(opts: &ValidationOptions) -> CheckResult {
    let n = 16;
    let spec = ensemble(n, 1.0, opts.seed)?;
    let mut worst_sum = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for r in 0..10 {
        let s = realization(&spec, r)?;
        let mut rng = stream_rng(derive_seed(opts.seed, &[r]), 3);
        let config = RisConfiguration::random(n, &mut rng);
        let loads = config.loads();
        let exact = mnt_channel(&s, loads, &EvalCounter::new()).map_err(|e| e.to_string())?;
        let sum = neumann_until(&s, loads, 1e-15, 10_000).map_err(|e| e.to_string())?;
        worst_sum = worst_sum.max(sum.channel.matrix().relative_error(exact.matrix()));
        let ss = s.s_ss();
        let phi_ss = ComplexMatrix::from_fn(n, n, |i, j| ss[(i, j)] * loads[i]);
        let rho = spectral_radius(&phi_ss).map_err(|e| e.to_string())?;
        let late = neumann_channel(&s, loads, 200)
            .map_err(|e| e.to_string())?
            .late_ratio(50)
            .ok_or("series terms vanished")?;
        worst_ratio = worst_ratio.max((late / rho - 1.0).abs());
    }
    Ok(vec![
        Measurement::new("converged sum relative error", worst_sum, Bound::AtMost(1e-10)),
        Measurement::new(
            "late term ratio vs spectral radius, relative deviation",
            worst_ratio,
            Bound::AtMost(0.2),
        ),
    ])
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

fn variance(opts: &ValidationOptions) -> CheckResult {
    let spec = ensemble(8, 1.0, opts.seed)?;
    let (mut diag_re, mut diag_im, mut off_re, mut off_im) = (vec![], vec![], vec![], vec![]);
    let mut asymmetric = 0usize;
    let mut active = 0usize;
    for r in 0..2000 {
        let s = match draw_realization(&spec, r) {
            Ok(s) => s,
            Err(EnsembleError::PassivityViolation { .. }) => {
                active += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        let m = s.matrix();
        if m != &m.transpose() {
            asymmetric += 1;
        }
        for i in 0..m.rows() {
            diag_re.push(m[(i, i)].re);
            diag_im.push(m[(i, i)].im);
            for j in i + 1..m.cols() {
                off_re.push(m[(i, j)].re);
                off_im.push(m[(i, j)].im);
            }
        }
    }
    let ratio = (sample_variance(&diag_re) + sample_variance(&diag_im))
        / (sample_variance(&off_re) + sample_variance(&off_im));
    Ok(vec![
        Measurement::new("diagonal / off-diagonal variance", ratio, Bound::Within(1.9, 2.1)),
        Measurement::new("asymmetric realizations", asymmetric as f64, Bound::Exactly(0.0)),
        Measurement::new("realizations with sigma_max >= 1", active as f64, Bound::Exactly(0.0)),
    ])
}

fn linearity(opts: &ValidationOptions) -> CheckResult {
    let spec = ensemble(16, 0.5, opts.seed)?;
    let mut worst = 0.0f64;
    for r in 0..20 {
        let s = realization(&spec, r)?;
        let doubled = s.with_ris_coupling_scaled(2.0).map_err(|e| e.to_string())?;
        let probe_seed = derive_seed(opts.seed, &[r, 4]);
        let mu = mutual_coupling_strength(&s, 100, probe_seed).map_err(|e| e.to_string())?;
        let mu2 = mutual_coupling_strength(&doubled, 100, probe_seed).map_err(|e| e.to_string())?;
        worst = worst.max((mu2 / (2.0 * mu) - 1.0).abs());
    }
    Ok(vec![Measurement::new(
        "relative deviation of mu(2 kappa) / 2 mu(kappa)",
        worst,
        Bound::AtMost(1e-12),
    )])
}

pub fn run_check(check: Check, opts: &ValidationOptions) -> CheckReport {
    let result = match check {
        Check::Woodbury => woodbury(opts),
        Check::Gradient => gradient(opts),
        Check::Neumann => neumann(opts),
        Check::Variance => variance(opts),
        Check::Linearity => linearity(opts),
    };
    match result {
        Ok(ms) => CheckReport::from_measurements(check, ms),
        Err(e) => CheckReport::failed(check, e),
    }
}

pub fn run_checks(checks: &[Check], opts: &ValidationOptions) -> Vec<CheckReport> {
    checks.iter().map(|&c| run_check(c, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for report in run_checks(&Check::ALL, &ValidationOptions::default()) {
            assert!(report.passed, "{report:?}");
        }
    }

    #[test]
    fn sign_fault_fails_only_the_flip_check() {
        let opts = ValidationOptions {
            inject_flip_fault: true,
            ..ValidationOptions::default()
        };
        let report = run_check(Check::Woodbury, &opts);
        assert!(!report.passed);
        assert!(report.measurements[0].observed > 1e-3);
        assert!(run_check(Check::Gradient, &opts).passed);
    }

    #[test]
    fn names_parse() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        assert!("nope".parse::<Check>().is_err());
    }
}
