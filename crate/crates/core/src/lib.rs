//! Statistical multiport-network (MNT) channel ensembles for RIS-parametrized
//! radio environments, and discrete 1-bit RIS configuration optimizers
//! evaluated against the exact MNT channel.

pub mod configuration;
pub mod ensemble;
pub mod harness;
pub mod models;
pub mod numeric;
pub mod optim;
pub mod rng;
pub mod validation;

pub use configuration::RisConfiguration;
