//! Cross-checks against dense nalgebra reference computations.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

use mntris_core::ensemble::{draw_scattering_matrix, EnsembleSpec, PortPartition, ScatteringMatrix};
use mntris_core::models::{
    casc_channel, fit_rr, mnt_channel, ChannelMatrix, ChannelModel, EvalCounter, ModelError, MntEvaluator,
};
use mntris_core::numeric::{largest_singular_value, least_squares, spectral_radius, ComplexMatrix};
use mntris_core::optim::coordinate_descent;
use mntris_core::rng::stream_rng;
use mntris_core::RisConfiguration;

fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn sample(n_ris: usize, kappa: f64, seed: u64) -> ScatteringMatrix {
    draw_scattering_matrix(&EnsembleSpec::new(PortPartition::siso(n_ris).unwrap(), kappa, seed)).unwrap()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn sigma_max_matches_dense_svd() {
    let mut rng = stream_rng(1, 0);
    for _ in 0..50 {
        let a = random_matrix(10, 10, &mut rng);
        let oracle = to_na(&a).singular_values().max();
        let sigma = largest_singular_value(&a).unwrap();
        assert!((sigma - oracle).abs() <= 1e-8 * oracle, "{sigma} vs {oracle}");
    }
}

#[test]
fn spectral_radius_matches_schur_eigenvalues() {
    let mut rng = stream_rng(2, 0);
    for _ in 0..50 {
        let a = random_matrix(8, 8, &mut rng);
        // scale into a contraction
        let a = a.scale(C64::new(0.9 / largest_singular_value(&a).unwrap(), 0.0));
        let eig = nalgebra::Schur::new(to_na(&a)).eigenvalues().expect("complex Schur form is triangular");
        let oracle = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let rho = spectral_radius(&a).unwrap();
        assert!((rho - oracle).abs() <= 1e-6, "{rho} vs {oracle}");
    }
}

#[test]
fn least_squares_matches_svd_solve() {
    let mut rng = stream_rng(3, 0);
    for _ in 0..20 {
        let a = random_matrix(30, 7, &mut rng);
        let b = random_matrix(30, 2, &mut rng);
        let x = least_squares(&a, &b).unwrap();
        let oracle = to_na(&a).svd(true, true).solve(&to_na(&b), 1e-14).unwrap();
        for i in 0..7 {
            for j in 0..2 {
                assert!(rel(x[(i, j)], oracle[(i, j)]) < 1e-10);
            }
        }
    }
}

#[test]
fn mnt_channel_matches_dense_inverse() {
    let mut rng = stream_rng(4, 0);
    for seed in 0..20 {
        let s = sample(24, 1.0, seed);
        let ss = to_na(s.s_ss());
        let (rs, st) = (to_na(s.s_rs()), to_na(s.s_st()));
        // binary configurations through (Φ⁻¹ − S_SS)⁻¹
        let c = RisConfiguration::random(24, &mut rng);
        let phi_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            24,
            c.loads().iter().map(|&x| C64::new(1.0 / x, 0.0)),
        ));
        let h_ref = s.s_rt()[(0, 0)] + (&rs * (phi_inv - &ss).try_inverse().unwrap() * &st)[(0, 0)];
        let h = mnt_channel(&s, c.loads(), &EvalCounter::new()).unwrap().siso_entry().unwrap();
        assert!(rel(h, h_ref) < 1e-10);
        // relaxed loads (including zeros) through (I − Φ S_SS)⁻¹ Φ
        let loads: Vec<f64> = (0..24).map(|i| if i % 5 == 0 { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
        let phi = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(24, loads.iter().map(|&x| C64::new(x, 0.0))));
        let eye = DMatrix::<C64>::identity(24, 24);
        let h_ref = s.s_rt()[(0, 0)] + (&rs * (eye - &phi * &ss).try_inverse().unwrap() * &phi * &st)[(0, 0)];
        let h = mnt_channel(&s, &loads, &EvalCounter::new()).unwrap().siso_entry().unwrap();
        assert!(rel(h, h_ref) < 1e-10);
    }
}

#[test]
fn ridge_fit_matches_centered_normal_equations() {
    let n = 12;
    let lambda = 0.05;
    let s = sample(n, 1.0, 9);
    let mut rng = stream_rng(10, 0);
    let data: Vec<(RisConfiguration, ChannelMatrix)> = (0..30)
        .map(|_| {
            let c = RisConfiguration::random(n, &mut rng);
            let h = mnt_channel(&s, c.loads(), &EvalCounter::new()).unwrap();
            (c, h)
        })
        .collect();
    let sur = fit_rr(&data, lambda).unwrap();

    // unpenalized intercept: w = (XcᵀXc + λI)⁻¹ Xcᵀ yc, b = ȳ − x̄ᵀw
    let m = data.len();
    let x = DMatrix::from_fn(m, n, |r, i| C64::new(data[r].0.loads()[i], 0.0));
    let y = DMatrix::from_fn(m, 1, |r, _| data[r].1.siso_entry().unwrap());
    let x_mean = DMatrix::from_fn(1, n, |_, i| x.column(i).sum() / m as f64);
    let y_mean = y.sum() / m as f64;
    let xc = DMatrix::from_fn(m, n, |r, i| x[(r, i)] - x_mean[(0, i)]);
    let yc = y.map(|v| v - y_mean);
    let gram = xc.transpose() * &xc + DMatrix::<C64>::identity(n, n) * C64::new(lambda, 0.0);
    let w = gram.try_inverse().unwrap() * xc.transpose() * yc;
    let b = y_mean - (&x_mean * &w)[(0, 0)];

    let map = sur.map();
    assert!(rel(map.intercept()[(0, 0)], b) < 1e-9);
    for i in 0..n {
        assert!(rel(map.weights()[(i, 0)], w[(i, 0)]) < 1e-9, "weight {i}");
    }
}

#[test]
fn uncoupled_flip_changes_do_not_depend_on_other_elements() {
    let n = 16;
    let s = sample(n, 0.0, 11);
    let mut rng = stream_rng(12, 0);
    for i in 0..n {
        let mut reference: Option<C64> = None;
        for _ in 0..50 {
            let mut c = RisConfiguration::random(n, &mut rng);
            if c.get(i) < 0 {
                c.flip(i);
            }
            let h0 = mnt_channel(&s, c.loads(), &EvalCounter::new()).unwrap().siso_entry().unwrap();
            let h1 = mnt_channel(&s, c.flipped(i).loads(), &EvalCounter::new()).unwrap().siso_entry().unwrap();
            let dh = h1 - h0;
            match reference {
                None => reference = Some(dh),
                Some(r) => assert!((dh - r).norm() <= 1e-12 * r.norm().max(1e-300), "element {i}"),
            }
        }
    }
}

#[test]
fn zero_ris_block_makes_mnt_equal_casc() {
    let s = sample(12, 0.0, 13).with_ris_block_zeroed().unwrap();
    let mut rng = stream_rng(14, 0);
    for _ in 0..100 {
        let c = RisConfiguration::random(12, &mut rng);
        let a = mnt_channel(&s, c.loads(), &EvalCounter::new()).unwrap();
        let b = casc_channel(&s, c.loads(), &EvalCounter::new()).unwrap();
        assert!(a.matrix().relative_error(b.matrix()) < 1e-15);
    }
}

/// Wraps the flip evaluator and compares every probe with a full
/// recomputation.
struct Checked<'a> {
    inner: MntEvaluator<'a>,
    s: &'a ScatteringMatrix,
    config: RisConfiguration,
    probed: Option<usize>,
    worst: f64,
    committed: usize,
}

impl ChannelModel for Checked<'_> {
    fn n_ris(&self) -> usize {
        self.inner.n_ris()
    }

    fn counter(&self) -> &EvalCounter {
        self.inner.counter()
    }

    fn reset(&mut self, config: &RisConfiguration) -> Result<ChannelMatrix, ModelError> {
        self.config = config.clone();
        self.inner.reset(config)
    }

    fn probe_flip(&mut self, i: usize) -> Result<ChannelMatrix, ModelError> {
        let h = self.inner.probe_flip(i)?;
        let full = mnt_channel(self.s, self.config.flipped(i).loads(), &EvalCounter::new())?;
        self.worst = self.worst.max(h.matrix().relative_error(full.matrix()));
        self.probed = Some(i);
        Ok(h)
    }

    fn accept_flip(&mut self) -> Result<(), ModelError> {
        self.inner.accept_flip()?;
        self.config.flip(self.probed.take().expect("probe before accept"));
        self.committed += 1;
        Ok(())
    }
}

#[test]
fn flip_updates_track_full_recompute_over_cd_runs() {
    let n = 32;
    let mut committed = 0;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let s = sample(n, 1.0, 100 + seed);
        let init = RisConfiguration::random(n, &mut stream_rng(seed, 1));
        let mut model = Checked {
            inner: MntEvaluator::new(&s, EvalCounter::new()),
            s: &s,
            config: init.clone(),
            probed: None,
            worst: 0.0,
            committed: 0,
        };
        let out = coordinate_descent(&mut model, &init).unwrap();
        assert_eq!(out.config, model.config);
        assert!(model.committed <= 1000);
        committed += model.committed;
        worst = worst.max(model.worst);
    }
    assert!(committed > 100);
    assert!(worst <= 1e-8, "{worst}");
}

fn median_secs(mut f: impl FnMut(), reps: usize) -> f64 {
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[reps / 2]
}

#[test]
fn flip_update_is_at_least_ten_times_faster_than_recompute() {
    let n = 100;
    let s = sample(n, 0.5, 21);
    let config = RisConfiguration::random(n, &mut stream_rng(22, 0));
    let counter = EvalCounter::new();
    let mut eval = MntEvaluator::new(&s, counter.clone());
    eval.load(&config).unwrap();
    let mut k = 0;
    // flip query plus its O(N²) commit, i.e. the full cost of an accepted step
    let flip = median_secs(
        || {
            for _ in 0..20 {
                k = (k + 1) % n;
                let (_, cache) = eval.flip_delta(k).unwrap();
                eval.commit_flip(cache).unwrap();
            }
        },
        15,
    );
    let mut c = config.clone();
    let full = median_secs(
        || {
            for _ in 0..20 {
                k = (k + 1) % n;
                c.flip(k);
                std::hint::black_box(mnt_channel(&s, c.loads(), &counter).unwrap());
            }
        },
        15,
    );
    assert!(full >= 10.0 * flip, "full {full:e}s vs flip {flip:e}s");
}
