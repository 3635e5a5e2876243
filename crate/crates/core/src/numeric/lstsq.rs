use super::{ComplexMatrix, NumericError, C64, TOLERANCES};

/// Minimizes `‖A X − B‖_F` for a tall, full-column-rank `A` by Householder QR.
pub fn least_squares(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericError> {
    let (m, n) = a.shape();
    if m < n {
        return Err(NumericError::DimensionMismatch(format!(
            "least squares needs rows >= cols, got {m}x{n}"
        )));
    }
    if b.rows() != m {
        return Err(NumericError::DimensionMismatch(format!(
            "A has {m} rows but B has {}",
            b.rows()
        )));
    }
    let k = b.cols();
    let mut r = a.clone();
    let mut qb = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    for j in 0..n {
        let norm = (j..m).map(|i| r[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm <= TOLERANCES.rank_deficiency * scale {
            return Err(NumericError::RankDeficient { column: j });
        }
        let head = r[(j, j)];
        let phase = if head.norm() > 0.0 {
            head / head.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut v: Vec<C64> = (j..m).map(|i| r[(i, j)]).collect();
        v[0] += phase * norm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        let reflect = |mat: &mut ComplexMatrix, col: usize| {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(p, vp)| vp.conj() * mat[(j + p, col)])
                .sum();
            for (p, vp) in v.iter().enumerate() {
                mat[(j + p, col)] -= 2.0 * vp * dot;
            }
        };
        for col in j..n {
            reflect(&mut r, col);
        }
        for col in 0..k {
            reflect(&mut qb, col);
        }
    }

    let mut x = ComplexMatrix::zeros(n, k);
    for col in 0..k {
        for i in (0..n).rev() {
            let mut acc = qb[(i, col)];
            for p in i + 1..n {
                acc -= r[(i, p)] * x[(p, col)];
            }
            x[(i, col)] = acc / r[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn square_system_is_solved_exactly() {
        let a = ComplexMatrix::new(2, 2, vec![c(2.0, 0.0), c(1.0, 1.0), c(0.0, 1.0), c(3.0, 0.0)])
            .unwrap();
        let x_true = ComplexMatrix::column(&[c(1.0, -1.0), c(0.5, 2.0)]);
        let b = a.matmul(&x_true).unwrap();
        let x = least_squares(&a, &b).unwrap();
        assert!(x.relative_error(&x_true) < 1e-14);
    }

    #[test]
    fn overdetermined_line_fit() {
        // y = 2 + 3 t sampled exactly at five points
        let ts = [0.0, 1.0, 2.0, 3.0, 4.0];
        let a = ComplexMatrix::from_fn(5, 2, |i, j| if j == 0 { c(1.0, 0.0) } else { c(ts[i], 0.0) });
        let b = ComplexMatrix::from_fn(5, 1, |i, _| c(2.0 + 3.0 * ts[i], 0.0));
        let x = least_squares(&a, &b).unwrap();
        assert!((x[(0, 0)] - c(2.0, 0.0)).norm() < 1e-12);
        assert!((x[(1, 0)] - c(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn normal_equations_hold_for_noisy_fit() {
        let a = ComplexMatrix::from_fn(7, 3, |i, j| c(((i * 3 + j * 5) % 7) as f64 - 3.0, (i + j) as f64 * 0.1));
        let b = ComplexMatrix::from_fn(7, 1, |i, _| c((i as f64).sin(), (i as f64).cos()));
        let x = least_squares(&a, &b).unwrap();
        let residual = a.matmul(&x).unwrap().sub(&b).unwrap();
        let grad = a.adjoint().matmul(&residual).unwrap();
        assert!(grad.max_abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let a = ComplexMatrix::from_fn(4, 2, |i, _| c(i as f64, 0.0));
        let b = ComplexMatrix::zeros(4, 1);
        assert!(matches!(
            least_squares(&a, &b),
            Err(NumericError::RankDeficient { column: 1 })
        ));
    }
}
