use super::{ComplexMatrix, NumericError, C64, TOLERANCES};

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    // L (unit diagonal, strictly lower part) and U packed together.
    lu: Vec<C64>,
    // perm[i] = original row placed at position i.
    perm: Vec<usize>,
}

impl LuFactor {
    pub fn new(a: &ComplexMatrix) -> Result<Self, NumericError> {
        if !a.is_square() {
            return Err(NumericError::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (mut p, mut best) = (k, lu[k * n + k].norm());
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > TOLERANCES.pivot_underflow) {
                return Err(NumericError::SingularMatrix {
                    column: k,
                    pivot: best,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot_inv = lu[k * n + k].inv();
            for i in k + 1..n {
                let factor = lu[i * n + k] * pivot_inv;
                lu[i * n + k] = factor;
                if factor == C64::new(0.0, 0.0) {
                    continue;
                }
                let (upper, lower) = lu.split_at_mut(i * n);
                let pivot_row = &upper[k * n + k + 1..k * n + n];
                for (x, u) in lower[k + 1..n].iter_mut().zip(pivot_row) {
                    *x -= factor * u;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericError> {
        self.check_rhs(b)?;
        let (n, k) = (self.n, b.cols());
        let mut x = ComplexMatrix::from_fn(n, k, |i, j| b[(self.perm[i], j)]);
        // forward substitution with unit-lower L
        for i in 0..n {
            for p in 0..i {
                let l = self.lu[i * n + p];
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..k {
                    let v = x[(p, j)];
                    x[(i, j)] -= l * v;
                }
            }
        }
        // back substitution with U
        for i in (0..n).rev() {
            for p in i + 1..n {
                let u = self.lu[i * n + p];
                for j in 0..k {
                    let v = x[(p, j)];
                    x[(i, j)] -= u * v;
                }
            }
            let d = self.lu[i * n + i].inv();
            for j in 0..k {
                x[(i, j)] *= d;
            }
        }
        Ok(x)
    }

    /// Solves `Aᵀ X = B` (plain transpose, no conjugation).
    pub fn solve_transpose(&self, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericError> {
        self.check_rhs(b)?;
        let (n, k) = (self.n, b.cols());
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ w = y, x = Pᵀ w.
        let mut y = b.clone();
        for i in 0..n {
            for p in 0..i {
                let u = self.lu[p * n + i];
                for j in 0..k {
                    let v = y[(p, j)];
                    y[(i, j)] -= u * v;
                }
            }
            let d = self.lu[i * n + i].inv();
            for j in 0..k {
                y[(i, j)] *= d;
            }
        }
        for i in (0..n).rev() {
            for p in i + 1..n {
                let l = self.lu[p * n + i];
                for j in 0..k {
                    let v = y[(p, j)];
                    y[(i, j)] -= l * v;
                }
            }
        }
        let mut x = ComplexMatrix::zeros(n, k);
        for i in 0..n {
            for j in 0..k {
                x[(self.perm[i], j)] = y[(i, j)];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<ComplexMatrix, NumericError> {
        self.solve(&ComplexMatrix::identity(self.n))
    }

    fn check_rhs(&self, b: &ComplexMatrix) -> Result<(), NumericError> {
        if b.rows() != self.n {
            return Err(NumericError::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {}",
                b.rows(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn solve_linear(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericError> {
    if a.is_square() && b.rows() != a.rows() {
        return Err(NumericError::DimensionMismatch(format!(
            "A is {}x{} but B has {} rows",
            a.rows(),
            a.cols(),
            b.rows()
        )));
    }
    LuFactor::new(a)?.solve(b)
}
