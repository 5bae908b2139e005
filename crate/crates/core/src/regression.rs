//! Ordinary least squares with an implicit intercept.
//!
//! One engine serves the informativeness regressions, the fund performance
//! models, and the Monte-Carlo conditional-variance estimator. Fits go
//! through a QR factorization of the design (never an explicit inverse),
//! with rank detected from the R diagonal at 1e-10 relative. Standard errors
//! are plain homoskedastic OLS; robust variants are out of scope.

use nalgebra::{DMatrix, DVector};

/// Relative tolerance on the R diagonal below which the design is declared
/// rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RegressionError {
    #[error("need at least {needed} observations for {regressors} regressors, got {got}")]
    InsufficientData {
        needed: usize,
        got: usize,
        regressors: usize,
    },
    #[error("design matrix is rank deficient (collinear or constant regressor)")]
    RankDeficient,
}

/// A fitted regression. `t_stats[0]` belongs to the intercept, `t_stats[1..]`
/// to the coefficients in design-column order.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub dof: usize,
    pub residual_variance: f64,
}

impl OlsFit {
    /// Fitted value for one design row (without intercept column).
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }
}

/// Fits `response ~ 1 + design` by least squares.
///
/// `design` is `n_obs x k` without the intercept column. Requires
/// `n_obs >= k + 2` so at least one degree of freedom remains for the
/// residual variance.
pub fn ols_fit(design: &DMatrix<f64>, response: &DVector<f64>) -> Result<OlsFit, RegressionError> {
    let n = response.len();
    let k = design.ncols();
    assert_eq!(
        design.nrows(),
        n,
        "design rows must match response length"
    );
    if n < k + 2 {
        return Err(RegressionError::InsufficientData {
            needed: k + 2,
            got: n,
            regressors: k,
        });
    }

    let p = k + 1;
    let mut x = DMatrix::<f64>::zeros(n, p);
    x.column_mut(0).fill(1.0);
    x.columns_mut(1, k).copy_from(design);

    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if max_diag == 0.0 || (0..p).any(|i| r[(i, i)].abs() < RANK_TOL * max_diag) {
        return Err(RegressionError::RankDeficient);
    }

    let q = qr.q();
    let beta = r
        .clone()
        .solve_upper_triangular(&(q.transpose() * response))
        .ok_or(RegressionError::RankDeficient)?;

    let fitted = &x * &beta;
    let resid = response - &fitted;
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let mean = response.mean();
    let sst: f64 = response.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        // Constant response: the intercept reproduces it exactly.
        1.0
    };

    let dof = n - p;
    let residual_variance = ssr / dof as f64;

    // diag((X'X)^-1) = rows of R^-T, squared-summed; solve R' w_j = e_j.
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(RegressionError::RankDeficient)?;
    let t_stats: Vec<f64> = (0..p)
        .map(|j| {
            let xtx_inv_jj: f64 = (0..p).map(|c| r_inv[(j, c)].powi(2)).sum();
            beta[j] / (residual_variance * xtx_inv_jj).sqrt()
        })
        .collect();

    Ok(OlsFit {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        t_stats,
        r_squared,
        n_obs: n,
        dof,
        residual_variance,
    })
}
