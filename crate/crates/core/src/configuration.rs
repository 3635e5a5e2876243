use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigurationError {
    #[error("entry {index} is {value}, expected -1 or +1")]
    NotBinary { index: usize, value: f64 },
    #[error("configuration must have at least one element")]
    Empty,
}

/// Binary RIS configuration: one load reflection coefficient in {−1, +1}
/// per RIS element.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct RisConfiguration {
    states: Vec<i8>,
    // same entries as f64 so channel evaluations can borrow a slice
    #[serde(skip)]
    loads: Vec<f64>,
}

impl RisConfiguration {
    pub fn from_signs(states: Vec<i8>) -> Result<Self, ConfigurationError> {
        if states.is_empty() {
            return Err(ConfigurationError::Empty);
        }
        if let Some((index, &v)) = states.iter().enumerate().find(|(_, s)| **s != 1 && **s != -1) {
            return Err(ConfigurationError::NotBinary {
                index,
                value: v as f64,
            });
        }
        let loads = states.iter().map(|&s| s as f64).collect();
        Ok(Self { states, loads })
    }

    pub fn from_loads(loads: &[f64]) -> Result<Self, ConfigurationError> {
        let mut states = Vec::with_capacity(loads.len());
        for (index, &value) in loads.iter().enumerate() {
            match value {
                v if v == 1.0 => states.push(1),
                v if v == -1.0 => states.push(-1),
                _ => return Err(ConfigurationError::NotBinary { index, value }),
            }
        }
        Self::from_signs(states)
    }

    pub fn all_positive(n: usize) -> Self {
        Self::from_signs(vec![1; n]).expect("n >= 1")
    }

    /// Uniform draw over {−1, +1}^n.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let states = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        Self::from_signs(states).expect("n >= 1")
    }

    /// Configuration number `index` in binary order: bit `i` set means element `i` is +1.
    pub fn from_index(n: usize, index: u64) -> Self {
        assert!(n <= 64);
        let states = (0..n).map(|i| if (index >> i) & 1 == 1 { 1 } else { -1 }).collect();
        Self::from_signs(states).expect("n >= 1")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.states
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }

    pub fn get(&self, i: usize) -> i8 {
        self.states[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.states[i] = -self.states[i];
        self.loads[i] = -self.loads[i];
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.flip(i);
        out
    }
}

impl PartialEq for RisConfiguration {
    fn eq(&self, other: &Self) -> bool {
        self.states == other.states
    }
}

impl Eq for RisConfiguration {}

impl std::hash::Hash for RisConfiguration {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.states.hash(state);
    }
}

impl TryFrom<Vec<i8>> for RisConfiguration {
    type Error = ConfigurationError;

    fn try_from(v: Vec<i8>) -> Result<Self, Self::Error> {
        Self::from_signs(v)
    }
}

impl From<RisConfiguration> for Vec<i8> {
    fn from(c: RisConfiguration) -> Self {
        c.states
    }
}

impl std::fmt::Debug for RisConfiguration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: String = self.states.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect();
        write!(f, "RisConfiguration({s})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_binary() {
        assert!(RisConfiguration::from_signs(vec![1, 0]).is_err());
        assert!(RisConfiguration::from_loads(&[1.0, 0.5]).is_err());
        assert!(RisConfiguration::from_signs(vec![]).is_err());
    }

    #[test]
    fn flip_is_an_involution() {
        let c = RisConfiguration::from_signs(vec![1, -1, 1]).unwrap();
        let f = c.flipped(1);
        assert_eq!(f.signs(), &[1, 1, 1]);
        assert_eq!(f.loads(), &[1.0, 1.0, 1.0]);
        assert_eq!(f.flipped(1), c);
    }

    #[test]
    fn serde_round_trip_as_sign_list() {
        let c = RisConfiguration::from_signs(vec![1, -1]).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, "[1,-1]");
        let back: RisConfiguration = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<RisConfiguration>("[1,2]").is_err());
    }
}
