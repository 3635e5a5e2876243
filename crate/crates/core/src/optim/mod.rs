//! Binary RIS optimizers: dictionary search, coordinate descent,
//! temperature-annealed back-propagation and a genetic algorithm, plus the
//! dictionary-based initializers.

mod adam;
mod cd;
mod dictionary;
mod ga;
mod init;
mod method;
mod tabp;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configuration::RisConfiguration;
use crate::ensemble::ScatteringMatrix;
use crate::models::{channel_gain, mnt_channel, EvalCounter, ModelError};

pub use adam::{AdamConfig, AdamState};
pub use cd::coordinate_descent;
pub use dictionary::{build_dictionary, dictionary_search, Dictionary};
pub use ga::{genetic_algorithm, genetic_algorithm_from, GaConfig};
pub use init::{make_initial_config, InitKind, InitOutcome};
pub use method::{run_method, Method, MethodParseError, RunParams};
pub use tabp::{cost_gradient, relaxed_loads, tabp, z_gradient, Fidelity, TabpSchedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("GA population must be even and >= 2, got {0}")]
    InvalidPopulation(usize),
    #[error("non-finite gradient entry at element {index}")]
    NonFiniteGradient { index: usize },
    #[error("invalid TABP schedule: {0}")]
    InvalidSchedule(String),
    #[error("{method} is not applicable with M = {m}")]
    NotApplicable { method: String, m: usize },
}

/// One model evaluation in an optimizer trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// 1-based index of the evaluation within the optimizer phase.
    pub evaluation: u64,
    /// Lowest cost seen so far under the optimizer's own model.
    pub best_cost: f64,
}

/// Raw result of an optimizer before ground-truth re-scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub config: RisConfiguration,
    /// Final cost under the optimizer's own model.
    pub cost: f64,
    pub evaluations: u64,
    pub peak_stored_configs: u64,
    pub trace: Vec<TracePoint>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub final_config: RisConfiguration,
    /// `|H|²` of the final configuration under the exact MNT model.
    pub final_gain_mnt: f64,
    pub final_cost_model: f64,
    /// All evaluations of the run, initializer included.
    pub model_evaluations: u64,
    /// Evaluations spent by the initializer (dictionary, RR-CD).
    pub init_evaluations: u64,
    /// Configurations held at once by the optimizer phase.
    pub peak_stored_configs: u64,
    pub trace: Vec<TracePoint>,
    pub wall_time: Duration,
    pub converged: bool,
}

impl OptimizationReport {
    /// Re-scores the outcome with the exact MNT model. The extra evaluation
    /// is not counted.
    pub fn from_outcome(
        s: &ScatteringMatrix,
        outcome: SearchOutcome,
        init_evaluations: u64,
        wall_time: Duration,
    ) -> Result<Self, OptimError> {
        let h = mnt_channel(s, outcome.config.loads(), &EvalCounter::new())?;
        Ok(Self {
            final_gain_mnt: channel_gain(&h)?,
            final_config: outcome.config,
            final_cost_model: outcome.cost,
            model_evaluations: init_evaluations + outcome.evaluations,
            init_evaluations,
            peak_stored_configs: outcome.peak_stored_configs,
            trace: outcome.trace,
            wall_time,
            converged: outcome.converged,
        })
    }

    /// Evaluations spent after initialization.
    pub fn evaluations_to_convergence(&self) -> u64 {
        self.model_evaluations - self.init_evaluations
    }
}

/// Running best-so-far trace.
#[derive(Debug, Default)]
pub(crate) struct Tracer {
    points: Vec<TracePoint>,
    best: f64,
}

impl Tracer {
    pub(crate) fn new() -> Self {
        Self {
            points: Vec::new(),
            best: f64::INFINITY,
        }
    }

    pub(crate) fn record(&mut self, cost: f64) {
        self.best = self.best.min(cost);
        self.points.push(TracePoint {
            evaluation: self.points.len() as u64 + 1,
            best_cost: self.best,
        });
    }

    pub(crate) fn into_points(self) -> Vec<TracePoint> {
        self.points
    }
}
