//! Shared symmetric-positive-definite solver with an explicit conditioning gate.
//!
//! Every matrix inversion in the equilibrium module goes through [`SpdMatrix`]:
//! a Cholesky factorization that is only granted after the eigenvalue spectrum
//! confirms positive definiteness and a condition number below the caller's
//! ceiling. Degenerate parameter sets therefore fail loudly instead of being
//! silently regularized.

use nalgebra::{DMatrix, DVector};

use crate::equilibrium::EquilibriumError;

/// Largest-to-smallest eigenvalue ratio of a symmetric matrix, with the
/// smallest eigenvalue reported separately so callers can distinguish
/// indefiniteness from ill-conditioning.
pub(crate) fn symmetric_spectrum(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigenvalues();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in eig.iter() {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

/// Worst relative asymmetry `|m_ij - m_ji| / scale`, where `scale` is the
/// largest absolute entry (or 1 for a zero matrix).
pub(crate) fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs() / scale);
        }
    }
    worst
}

/// Replaces `m` with its symmetric part. Products of symmetric matrices pick
/// up rounding asymmetry; downstream factorizations expect exact symmetry.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// A validated SPD matrix together with its Cholesky factorization.
#[derive(Debug)]
pub(crate) struct SpdMatrix {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SpdMatrix {
    /// Validates definiteness and conditioning, then factorizes.
    ///
    /// `what` names the matrix in error reports.
    pub fn new(
        matrix: DMatrix<f64>,
        ceiling: f64,
        what: &'static str,
    ) -> Result<Self, EquilibriumError> {
        let (min, max) = symmetric_spectrum(&matrix);
        if min <= 0.0 {
            return Err(EquilibriumError::NonInvertible {
                what,
                condition: f64::INFINITY,
            });
        }
        let condition = max / min;
        if condition > ceiling {
            return Err(EquilibriumError::NonInvertible { what, condition });
        }
        let chol = nalgebra::Cholesky::new(matrix)
            .ok_or(EquilibriumError::NonInvertible { what, condition })?;
        Ok(Self { chol })
    }

    /// Lower-triangular Cholesky factor, for sampling correlated normals.
    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.chol.inverse();
        symmetrize(&mut inv);
        inv
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }
}
