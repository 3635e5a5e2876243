use super::{OptimError, SearchOutcome, Tracer};
use crate::configuration::RisConfiguration;
use crate::models::{cost, ChannelModel};

/// Configurations held by CD: the current one and the flipped candidate.
const CD_STORED_CONFIGS: u64 = 2;

/// Binary coordinate descent.
///
/// Visits elements cyclically in index order, keeps a flip only when it
/// strictly lowers the cost, and stops after `N_S` consecutive rejections.
/// Uses one evaluation for the start point and one per candidate flip.
pub fn coordinate_descent(
    model: &mut dyn ChannelModel,
    c_init: &RisConfiguration,
) -> Result<SearchOutcome, OptimError> {
    let n = model.n_ris();
    let start = model.counter().get();
    let mut tracer = Tracer::new();
    let mut config = c_init.clone();
    let mut current = cost(&model.reset(&config)?)?;
    tracer.record(current);

    let mut stall = 0;
    let mut j = 0;
    while stall < n {
        let i = j;
        j = (j + 1) % n;
        let candidate = cost(&model.probe_flip(i)?)?;
        if candidate < current {
            model.accept_flip()?;
            config.flip(i);
            current = candidate;
            stall = 0;
        } else {
            stall += 1;
        }
        tracer.record(current);
    }

    Ok(SearchOutcome {
        config,
        cost: current,
        evaluations: model.counter().get() - start,
        peak_stored_configs: CD_STORED_CONFIGS,
        trace: tracer.into_points(),
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{draw_scattering_matrix, EnsembleSpec, PortPartition, ScatteringMatrix};
    use crate::models::{casc_channel, mnt_channel, AffineChannel, AffineModel, EvalCounter, MntEvaluator};
    use crate::rng::stream_rng;

    fn sample(n_ris: usize, kappa: f64, seed: u64) -> ScatteringMatrix {
        draw_scattering_matrix(&EnsembleSpec::new(PortPartition::siso(n_ris).unwrap(), kappa, seed))
            .unwrap()
    }

    #[test]
    fn casc_cd_reaches_the_exhaustive_optimum() {
        for seed in 0..5 {
            let s = sample(12, 1.0, seed);
            let counter = EvalCounter::new();
            let mut model = AffineModel::new(AffineChannel::from_casc(&s), counter.clone());
            let init = RisConfiguration::random(12, &mut stream_rng(seed, 9));
            let out = coordinate_descent(&mut model, &init).unwrap();
            let best = (0..1u64 << 12)
                .map(|k| {
                    let c = RisConfiguration::from_index(12, k);
                    crate::models::cost(&casc_channel(&s, c.loads(), &EvalCounter::new()).unwrap())
                        .unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((out.cost - best).abs() <= 1e-12 * best.abs(), "seed {seed}");
            assert_eq!(out.evaluations, out.trace.len() as u64);
            assert_eq!(counter.get(), out.evaluations);
        }
    }

    #[test]
    fn mnt_cd_is_one_flip_optimal_and_descending() {
        let s = sample(12, 1.0, 7);
        let mut ev = MntEvaluator::new(&s, EvalCounter::new());
        let init = RisConfiguration::random(12, &mut stream_rng(8, 0));
        let init_cost =
            crate::models::cost(&mnt_channel(&s, init.loads(), &EvalCounter::new()).unwrap()).unwrap();
        let out = coordinate_descent(&mut ev, &init).unwrap();
        assert!(out.cost <= init_cost);
        for i in 0..12 {
            let h = mnt_channel(&s, out.config.flipped(i).loads(), &EvalCounter::new()).unwrap();
            assert!(crate::models::cost(&h).unwrap() >= out.cost - 1e-15);
        }
        assert!(out.trace.windows(2).all(|w| w[1].best_cost <= w[0].best_cost));
    }

    #[test]
    fn local_optimum_stops_after_one_pass() {
        let s = sample(10, 1.0, 11);
        let mut ev = MntEvaluator::new(&s, EvalCounter::new());
        let first = coordinate_descent(&mut ev, &RisConfiguration::all_positive(10)).unwrap();
        let again = coordinate_descent(&mut ev, &first.config).unwrap();
        assert_eq!(again.evaluations, 1 + 10);
        assert_eq!(again.config, first.config);
    }
}
