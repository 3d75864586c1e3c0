use lare_core::linalg::{Cholesky, Matrix};
use lare_core::Scalar;

use crate::error::{DecompError, Result};

/// Ridge regression of returns on feature-count rows.
#[derive(Debug, Clone)]
pub struct LsSolution<S> {
    /// `(HᵀH + λI)⁻¹ Σ_l h_l R_l`
    pub r_hat: Vec<S>,
    /// `A = HᵀH + λI`
    pub a: Matrix<S>,
    pub chol: Cholesky<S>,
}

/// Solves the regularised least-squares problem through a Cholesky
/// factorisation of `A = HᵀH + λI`.
pub fn closed_form_ls<S: Scalar>(h: &[Vec<S>], returns: &[S], lambda: S, dim: usize) -> Result<LsSolution<S>> {
    if !(lambda > S::zero()) {
        return Err(DecompError::InvalidInput(format!("λ must be positive, got {lambda}")));
    }
    if h.len() != returns.len() {
        return Err(DecompError::InvalidInput(format!(
            "{} rows but {} returns",
            h.len(),
            returns.len()
        )));
    }
    let mut a = Matrix::scaled_identity(dim, lambda);
    let mut b = vec![S::zero(); dim];
    for (row, &r) in h.iter().zip(returns) {
        if row.len() != dim {
            return Err(DecompError::InvalidInput(format!(
                "row of length {} in a {dim}-dimensional problem",
                row.len()
            )));
        }
        a.add_outer(row, S::one());
        for (bi, &x) in b.iter_mut().zip(row) {
            *bi += x * r;
        }
    }
    let chol = Cholesky::factor(&a)?;
    let r_hat = chol.solve(&b);
    Ok(LsSolution { r_hat, a, chol })
}

/// Incrementally maintained version of [`closed_form_ls`].
#[derive(Debug, Clone)]
pub struct RidgeAccumulator<S> {
    a: Matrix<S>,
    b: Vec<S>,
    count: usize,
}

impl<S: Scalar> RidgeAccumulator<S> {
    pub fn new(dim: usize, lambda: S) -> Self {
        Self {
            a: Matrix::scaled_identity(dim, lambda),
            b: vec![S::zero(); dim],
            count: 0,
        }
    }

    pub fn push(&mut self, row: &[S], ret: S) {
        self.a.add_outer(row, S::one());
        for (bi, &x) in self.b.iter_mut().zip(row) {
            *bi += x * ret;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.a
    }

    pub fn solve(&self) -> Result<(Vec<S>, Cholesky<S>)> {
        let chol = Cholesky::factor(&self.a)?;
        Ok((chol.solve(&self.b), chol))
    }
}
