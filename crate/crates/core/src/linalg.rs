//! Dense symmetric positive-definite linear algebra for small systems.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, S::one())
    }

    pub fn scaled_identity(n: usize, diag: S) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = diag;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(CoreError::ShapeMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self += alpha · x xᵀ`
    pub fn add_outer(&mut self, x: &[S], alpha: S) {
        debug_assert_eq!(self.rows, x.len());
        debug_assert_eq!(self.cols, x.len());
        for i in 0..self.rows {
            let xi = alpha * x[i];
            for j in 0..self.cols {
                self.data[i * self.cols + j] += xi * x[j];
            }
        }
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `xᵀ M x`
    pub fn quad_form(&self, x: &[S]) -> S {
        dot(x, &self.mul_vec(x))
    }

    /// `‖x‖_M = √(xᵀ M x)` straight from the definition.
    pub fn weighted_norm(&self, x: &[S]) -> S {
        self.quad_form(x).max(S::zero()).sqrt()
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<S> {
    n: usize,
    lower: Vec<S>,
}

impl<S: Scalar> Cholesky<S> {
    pub fn factor(m: &Matrix<S>) -> Result<Self> {
        if m.rows != m.cols {
            return Err(CoreError::ShapeMismatch {
                expected: m.rows,
                got: m.cols,
            });
        }
        let n = m.rows;
        let mut l = vec![S::zero(); n * n];
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > S::zero()) {
                return Err(CoreError::InvalidInput(format!(
                    "matrix is not positive definite (pivot {j} = {d})"
                )));
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        y
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        x
    }

    /// `‖x‖_{M⁻¹} = ‖L⁻¹ x‖₂`
    pub fn inverse_norm(&self, x: &[S]) -> S {
        let y = self.forward(x);
        dot(&y, &y).sqrt()
    }

    /// `‖x‖_M = ‖Lᵀ x‖₂`
    pub fn norm(&self, x: &[S]) -> S {
        let n = self.n;
        let mut acc = S::zero();
        for j in 0..n {
            let mut s = S::zero();
            for i in j..n {
                s += self.lower[i * n + j] * x[i];
            }
            acc += s * s;
        }
        acc.sqrt()
    }
}
