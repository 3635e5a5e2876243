use serde::{Deserialize, Serialize};

use super::{coordinate_descent, dictionary_search, Dictionary, OptimError, SearchOutcome};
use crate::configuration::RisConfiguration;
use crate::models::{fit_rr, AffineModel, EvalCounter, RrSurrogate};
use crate::rng::{stream_rng, streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Random,
    DictionaryBest,
    RrCdResult,
}

#[derive(Debug, Clone)]
pub struct InitOutcome {
    pub config: RisConfiguration,
    /// Kind actually used; an empty dictionary falls back to `Random`.
    pub kind: InitKind,
    /// Surrogate evaluations of RR-CD. Dictionary evaluations are not included.
    pub evaluations: u64,
    pub surrogate: Option<RrSurrogate>,
}

/// Initial configuration for CD or TABP.
///
/// `Random` draws uniformly; `DictionaryBest` takes the dictionary-search
/// winner; `RrCdResult` fits a ridge surrogate on the dictionary and runs
/// coordinate descent on it from a random start. With an empty dictionary
/// every kind is `Random`.
pub fn make_initial_config(
    kind: InitKind,
    dict: &Dictionary,
    n_ris: usize,
    rr_lambda: f64,
    seed: u64,
    counter: &EvalCounter,
) -> Result<InitOutcome, OptimError> {
    let kind = if dict.is_empty() { InitKind::Random } else { kind };
    let start = counter.get();
    let (config, surrogate) = match kind {
        InitKind::Random => (random_start(n_ris, seed), None),
        InitKind::DictionaryBest => (dictionary_search(dict)?.0, None),
        InitKind::RrCdResult => {
            let (out, sur) = rr_cd(dict, n_ris, rr_lambda, seed, counter)?;
            (out.config, Some(sur))
        }
    };
    Ok(InitOutcome {
        config,
        kind,
        evaluations: counter.get() - start,
        surrogate,
    })
}

fn random_start(n_ris: usize, seed: u64) -> RisConfiguration {
    RisConfiguration::random(n_ris, &mut stream_rng(seed, streams::INIT))
}

/// Coordinate descent on a ridge surrogate fitted to `dict`, from a random
/// start.
pub(crate) fn rr_cd(
    dict: &Dictionary,
    n_ris: usize,
    rr_lambda: f64,
    seed: u64,
    counter: &EvalCounter,
) -> Result<(SearchOutcome, RrSurrogate), OptimError> {
    let sur = fit_rr(dict.entries(), rr_lambda)?;
    let mut model = AffineModel::new(sur.map().clone(), counter.clone());
    let out = coordinate_descent(&mut model, &random_start(n_ris, seed))?;
    Ok((out, sur))
}
