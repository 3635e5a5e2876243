use super::OptimError;
use crate::configuration::RisConfiguration;
use crate::ensemble::ScatteringMatrix;
use crate::models::{cost, mnt_channel, ChannelMatrix, EvalCounter, ModelError};
use crate::rng::{stream_rng, streams};

/// `M` random configurations with their exact MNT channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    entries: Vec<(RisConfiguration, ChannelMatrix)>,
}

impl Dictionary {
    pub fn from_entries(entries: Vec<(RisConfiguration, ChannelMatrix)>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[(RisConfiguration, ChannelMatrix)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The first `m` entries. Dictionaries built from one seed are nested, so
    /// this equals building with size `m` directly.
    pub fn prefix(&self, m: usize) -> Dictionary {
        Dictionary {
            entries: self.entries[..m.min(self.entries.len())].to_vec(),
        }
    }
}

/// Draws `m` uniform configurations (with replacement) and evaluates each
/// with the MNT model, counting `m` evaluations.
pub fn build_dictionary(
    s: &ScatteringMatrix,
    m: usize,
    seed: u64,
    counter: &EvalCounter,
) -> Result<Dictionary, ModelError> {
    let mut rng = stream_rng(seed, streams::DICTIONARY);
    let mut entries = Vec::with_capacity(m);
    for _ in 0..m {
        let c = RisConfiguration::random(s.n_ris(), &mut rng);
        let h = mnt_channel(s, c.loads(), counter)?;
        entries.push((c, h));
    }
    Ok(Dictionary { entries })
}

/// Lowest-cost stored configuration; ties go to the lowest index.
pub fn dictionary_search(dict: &Dictionary) -> Result<(RisConfiguration, f64), OptimError> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, (_, h)) in dict.entries.iter().enumerate() {
        let c = cost(h)?;
        if best.is_none_or(|(_, b)| c < b) {
            best = Some((idx, c));
        }
    }
    let (idx, c) = best.ok_or(OptimError::EmptyDictionary)?;
    Ok((dict.entries[idx].0.clone(), c))
}
