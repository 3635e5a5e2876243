use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::init::rr_cd;
use super::{
    coordinate_descent, dictionary_search, genetic_algorithm, make_initial_config, tabp, AdamConfig,
    Dictionary, Fidelity, GaConfig, InitKind, OptimError, OptimizationReport, SearchOutcome,
    TabpSchedule, Tracer,
};
use crate::ensemble::ScatteringMatrix;
use crate::models::{cost, AffineChannel, AffineModel, EvalCounter, MntEvaluator, DEFAULT_RIDGE_LAMBDA};
use crate::rng::{derive_seed, streams};

/// An optimizer together with its model fidelity and initializer.
///
/// Textual form: `ds`, `rr-cd`, `ga`, or `{mnt,casc}-{cd,tabp}` with an
/// optional `:random`, `:ds` or `:rrcd` initializer suffix. Without a suffix
/// CD and TABP start from the dictionary-search winner (random when `M = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Ds,
    RrCd,
    Cd { fidelity: Fidelity, init: InitKind },
    Tabp { fidelity: Fidelity, init: InitKind },
    Ga,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method {0:?}; expected ds, rr-cd, ga or mnt|casc-cd|tabp[:random|:ds|:rrcd]")]
pub struct MethodParseError(pub String);

impl Method {
    pub const DEFAULT_INIT: InitKind = InitKind::DictionaryBest;

    /// The seven methods of the standard comparison.
    pub fn standard() -> Vec<Method> {
        let init = Self::DEFAULT_INIT;
        vec![
            Method::Ds,
            Method::RrCd,
            Method::Cd { fidelity: Fidelity::Casc, init },
            Method::Cd { fidelity: Fidelity::Mnt, init },
            Method::Tabp { fidelity: Fidelity::Casc, init },
            Method::Tabp { fidelity: Fidelity::Mnt, init },
            Method::Ga,
        ]
    }

    /// Whether a cell with dictionary size `m` exists for this method. DS,
    /// RR-CD and GA have nothing to run at `M = 0`.
    pub fn applies_to(&self, m: usize) -> bool {
        match self {
            Method::Ds | Method::RrCd | Method::Ga => m > 0,
            Method::Cd { .. } | Method::Tabp { .. } => true,
        }
    }

    /// Whether runs read the shared dictionary.
    pub fn uses_dictionary(&self) -> bool {
        match self {
            Method::Ds | Method::RrCd => true,
            Method::Cd { init, .. } | Method::Tabp { init, .. } => *init != InitKind::Random,
            Method::Ga => false,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fid = |x: &Fidelity| match x {
            Fidelity::Mnt => "mnt",
            Fidelity::Casc => "casc",
        };
        let suffix = |i: &InitKind| match i {
            InitKind::DictionaryBest => "",
            InitKind::Random => ":random",
            InitKind::RrCdResult => ":rrcd",
        };
        match self {
            Method::Ds => write!(f, "ds"),
            Method::RrCd => write!(f, "rr-cd"),
            Method::Ga => write!(f, "ga"),
            Method::Cd { fidelity, init } => write!(f, "{}-cd{}", fid(fidelity), suffix(init)),
            Method::Tabp { fidelity, init } => write!(f, "{}-tabp{}", fid(fidelity), suffix(init)),
        }
    }
}

impl FromStr for Method {
    type Err = MethodParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || MethodParseError(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let (name, init) = match lower.split_once(':') {
            None => (lower.as_str(), Self::DEFAULT_INIT),
            Some((name, suffix)) => {
                let init = match suffix {
                    "random" => InitKind::Random,
                    "ds" => InitKind::DictionaryBest,
                    "rrcd" | "rr-cd" => InitKind::RrCdResult,
                    _ => return Err(err()),
                };
                (name, init)
            }
        };
        let has_suffix = lower.contains(':');
        Ok(match name {
            "ds" if !has_suffix => Method::Ds,
            "rr-cd" if !has_suffix => Method::RrCd,
            "ga" if !has_suffix => Method::Ga,
            "mnt-cd" => Method::Cd { fidelity: Fidelity::Mnt, init },
            "casc-cd" => Method::Cd { fidelity: Fidelity::Casc, init },
            "mnt-tabp" => Method::Tabp { fidelity: Fidelity::Mnt, init },
            "casc-tabp" => Method::Tabp { fidelity: Fidelity::Casc, init },
            _ => return Err(err()),
        })
    }
}

impl TryFrom<String> for Method {
    type Error = MethodParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.to_string()
    }
}

/// Optimizer hyper-parameters shared by every run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunParams {
    pub rr_lambda: f64,
    pub tabp: TabpSchedule,
    pub adam: AdamConfig,
    pub ga: GaConfig,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            rr_lambda: DEFAULT_RIDGE_LAMBDA,
            tabp: TabpSchedule::default(),
            adam: AdamConfig::default(),
            ga: GaConfig::default(),
        }
    }
}

/// Runs one method on one realization with a dictionary of size `M`.
///
/// The dictionary's `M` MNT evaluations are charged to every run that reads
/// it, as initializer evaluations for CD and TABP. The final configuration is
/// re-scored with the exact MNT model.
pub fn run_method(
    s: &ScatteringMatrix,
    method: Method,
    dict: &Dictionary,
    params: &RunParams,
    seed: u64,
) -> Result<OptimizationReport, OptimError> {
    let m = dict.len();
    if !method.applies_to(m) {
        return Err(OptimError::NotApplicable {
            method: method.to_string(),
            m,
        });
    }
    let started = Instant::now();
    let counter = EvalCounter::new();
    let init_seed = derive_seed(seed, &[streams::INIT]);
    let n = s.n_ris();

    let (outcome, init_evals) = match method {
        Method::Ds => {
            let (config, best) = dictionary_search(dict)?;
            let mut tracer = Tracer::new();
            for (_, h) in dict.entries() {
                tracer.record(cost(h)?);
            }
            let outcome = SearchOutcome {
                config,
                cost: best,
                evaluations: m as u64,
                peak_stored_configs: m as u64,
                trace: tracer.into_points(),
                converged: true,
            };
            (outcome, 0)
        }
        Method::RrCd => {
            let (mut outcome, _) = rr_cd(dict, n, params.rr_lambda, init_seed, &counter)?;
            // the regression holds the dictionary, CD its own two configs
            outcome.peak_stored_configs += m as u64;
            (outcome, m as u64)
        }
        Method::Cd { fidelity, init } | Method::Tabp { fidelity, init } => {
            let start = make_initial_config(init, dict, n, params.rr_lambda, init_seed, &counter)?;
            let dict_evals = if start.kind == InitKind::Random { 0 } else { m as u64 };
            let init_evals = dict_evals + start.evaluations;
            let run_counter = EvalCounter::new();
            let outcome = match (method, fidelity) {
                (Method::Cd { .. }, Fidelity::Mnt) => {
                    let mut ev = MntEvaluator::new(s, run_counter);
                    coordinate_descent(&mut ev, &start.config)?
                }
                (Method::Cd { .. }, Fidelity::Casc) => {
                    let mut model = AffineModel::new(AffineChannel::from_casc(s), run_counter);
                    coordinate_descent(&mut model, &start.config)?
                }
                _ => tabp(s, fidelity, &start.config, &params.tabp, params.adam, &run_counter)?,
            };
            (outcome, init_evals)
        }
        Method::Ga => {
            let ga_seed = derive_seed(seed, &[streams::GA]);
            (genetic_algorithm(s, m, &params.ga, ga_seed, &counter)?, 0)
        }
    };
    OptimizationReport::from_outcome(s, outcome, init_evals, started.elapsed())
}
