use super::{ComplexMatrix, NumericError, C64, TOLERANCES};
use crate::rng::splitmix64;

/// Fixed, generic start vector for the power iteration.
fn start_vector(n: usize) -> Vec<C64> {
    let mut state = 0x5eed_u64;
    let mut unit = || {
        state = splitmix64(state);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v: Vec<C64> = (0..n).map(|_| C64::new(1.0 + unit(), unit())).collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [C64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

/// Largest singular value by power iteration on `AᴴA` from a fixed start
/// vector. The iteration stops once the Rayleigh quotient changes by less than
/// [`TOLERANCES.power_iteration_step`](super::Tolerances) relative.
pub fn largest_singular_value(a: &ComplexMatrix) -> Result<f64, NumericError> {
    if !a.is_finite() {
        return Err(NumericError::NonFinite);
    }
    let mut v = start_vector(a.cols());
    let mut previous = f64::NAN;
    for _ in 0..TOLERANCES.power_iteration_max {
        let av = a.mul_vec(&v);
        let lambda: f64 = av.iter().map(|z| z.norm_sqr()).sum();
        if lambda == 0.0 {
            // v is in the null space; for a zero matrix this is exact.
            if a.max_abs() == 0.0 {
                return Ok(0.0);
            }
            // Otherwise nudge away from the null space.
            v = start_vector(a.cols()).into_iter().rev().collect();
            continue;
        }
        if (lambda - previous).abs() <= TOLERANCES.power_iteration_step * lambda {
            return Ok(lambda.sqrt());
        }
        previous = lambda;
        v = a.adjoint_mul_vec(&av);
        normalize(&mut v);
    }
    Err(NumericError::ConvergenceFailure {
        method: "power iteration",
        iterations: TOLERANCES.power_iteration_max,
    })
}

/// Largest eigenvalue magnitude, `max |λᵢ(A)|`.
///
/// All eigenvalues are computed with [`eigenvalues`], so matrices whose
/// dominant eigenvalues share a magnitude need no special handling.
pub fn spectral_radius(a: &ComplexMatrix) -> Result<f64, NumericError> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Eigenvalues of a square complex matrix (Householder reduction to
/// Hessenberg form followed by single-shift QR with Wilkinson shifts).
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<C64>, NumericError> {
    if !a.is_square() {
        return Err(NumericError::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(NumericError::NonFinite);
    }
    let mut h = a.clone();
    hessenberg_in_place(&mut h);
    hessenberg_qr(h)
}

fn hessenberg_in_place(h: &mut ComplexMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let alpha_norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut v = x;
        v[0] += phase * alpha_norm;
        if normalize(&mut v) == 0.0 {
            continue;
        }
        // H ← (I − 2vvᴴ) H on rows k+1..n
        for j in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(p, vp)| vp.conj() * h[(k + 1 + p, j)])
                .sum();
            for (p, vp) in v.iter().enumerate() {
                h[(k + 1 + p, j)] -= 2.0 * vp * dot;
            }
        }
        // H ← H (I − 2vvᴴ) on columns k+1..n
        for i in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(p, vp)| h[(i, k + 1 + p)] * vp)
                .sum();
            for (p, vp) in v.iter().enumerate() {
                h[(i, k + 1 + p)] -= 2.0 * dot * vp.conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

/// Complex Givens rotation `G = [[c, s], [−s̄, c]]` with `G [a; b] = [r; 0]`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    (an / r, (a / an) * b.conj() / r)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    // eigenvalue of [[a, b], [c, d]] closest to d
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn hessenberg_qr(mut h: ComplexMatrix) -> Result<Vec<C64>, NumericError> {
    let n = h.rows();
    let mut eig = vec![C64::new(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut sweeps_since_deflation = 0usize;
    let mut total_sweeps = 0usize;
    let max_total = TOLERANCES.qr_sweeps_per_eigenvalue * n.max(1);

    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // find the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let scale = if diag > 0.0 { diag } else { h.max_abs() };
            if sub <= f64::EPSILON * scale {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            sweeps_since_deflation = 0;
            continue;
        }
        total_sweeps += 1;
        sweeps_since_deflation += 1;
        if total_sweeps > max_total {
            return Err(NumericError::ConvergenceFailure {
                method: "Hessenberg QR",
                iterations: total_sweeps,
            });
        }

        let mut mu = wilkinson_shift(
            h[(hi - 1, hi - 1)],
            h[(hi - 1, hi)],
            h[(hi, hi - 1)],
            h[(hi, hi)],
        );
        if sweeps_since_deflation % 11 == 10 {
            // exceptional shift breaks symmetric stalls
            mu = h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() * 0.75, 0.0);
        }

        for k in lo..=hi {
            h[(k, k)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = c * x + s * y;
                h[(k + 1, j)] = -s.conj() * x + c * y;
            }
            rotations.push((c, s));
        }
        for (offset, (c, s)) in rotations.into_iter().enumerate() {
            let k = lo + offset;
            let last_row = (k + 2).min(hi);
            for i in lo..=last_row {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = c * x + s.conj() * y;
                h[(i, k + 1)] = -s * x + c * y;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(eig)
}
