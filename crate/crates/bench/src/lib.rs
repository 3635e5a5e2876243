//! Fixtures shared by the benchmarks.

use mntris_core::ensemble::{draw_scattering_matrix, EnsembleSpec, PortPartition, ScatteringMatrix};
use mntris_core::rng::stream_rng;
use mntris_core::RisConfiguration;

/// SISO realization with `n_ris` elements at coupling scale `kappa`.
pub fn scattering(n_ris: usize, kappa: f64, seed: u64) -> ScatteringMatrix {
    let partition = PortPartition::siso(n_ris).expect("n_ris > 0");
    draw_scattering_matrix(&EnsembleSpec::new(partition, kappa, seed)).expect("passive realization")
}

pub fn random_config(n_ris: usize, seed: u64) -> RisConfiguration {
    RisConfiguration::random(n_ris, &mut stream_rng(seed, 0))
}
