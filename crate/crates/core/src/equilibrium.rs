//! Closed-form multi-asset Grossman-Stiglitz equilibrium.
//!
//! A fraction `lambda` of investors observes the payoff signal `theta`; the
//! rest observe only the equilibrium price, which is kept partially revealing
//! by random per-capita supply `z`. With CARA utility and joint normality the
//! price is linear in `theta - alpha*U*z` and every equilibrium object has a
//! closed form. This module computes those objects exactly: the price
//! coefficients, the information-asymmetry matrix `N = Var(theta | P0)`, both
//! groups' demands, the uninformed investor's expected holdings, and the
//! per-asset informativeness measure that the empirical pipeline proxies with
//! a regression R-squared.
//!
//! Every inversion goes through an SPD factorization with a condition-number
//! ceiling (default 1e12); degenerate parameters are reported, never patched.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{relative_asymmetry, symmetric_spectrum, symmetrize, SpdMatrix};

/// Default ceiling on the condition number of any matrix the solver inverts.
pub const DEFAULT_CONDITION_CEILING: f64 = 1e12;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum EquilibriumError {
    #[error("vector or matrix dimension {got} does not match the {expected}-asset economy")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{what} is not invertible at the configured ceiling (condition {condition:.3e})")]
    NonInvertible { what: &'static str, condition: f64 },
    #[error("{what} must be symmetric to within 1e-12 relative (worst deviation {deviation:.3e})")]
    NotSymmetric { what: &'static str, deviation: f64 },
    #[error("{what} must be positive definite (smallest eigenvalue {eigenvalue:.3e})")]
    NotPositiveDefinite { what: &'static str, eigenvalue: f64 },
    #[error("{what} must satisfy {requirement} (got {got})")]
    InvalidScalar {
        what: &'static str,
        requirement: &'static str,
        got: f64,
    },
}

/// Exogenous description of the economy.
///
/// `info_cov`, `residual_cov`, and `supply_cov` are the covariance matrices of
/// the signal, the residual payoff component, and the per-capita supply; all
/// three must be symmetric positive definite for the equilibrium to exist and
/// be unique.
#[derive(Debug, Clone)]
pub struct EconomyParams {
    n_assets: usize,
    risk_aversion: f64,
    informed_fraction: f64,
    info_cov: DMatrix<f64>,
    residual_cov: DMatrix<f64>,
    supply_cov: DMatrix<f64>,
    mean_info: DVector<f64>,
    mean_supply: DVector<f64>,
    condition_ceiling: f64,
}

impl EconomyParams {
    pub fn new(
        risk_aversion: f64,
        informed_fraction: f64,
        info_cov: DMatrix<f64>,
        residual_cov: DMatrix<f64>,
        supply_cov: DMatrix<f64>,
        mean_info: DVector<f64>,
        mean_supply: DVector<f64>,
    ) -> Result<Self, EquilibriumError> {
        if !(risk_aversion > 0.0) {
            return Err(EquilibriumError::InvalidScalar {
                what: "risk aversion",
                requirement: "a > 0",
                got: risk_aversion,
            });
        }
        if !(informed_fraction > 0.0 && informed_fraction <= 1.0) {
            return Err(EquilibriumError::InvalidScalar {
                what: "informed fraction",
                requirement: "0 < lambda <= 1",
                got: informed_fraction,
            });
        }
        let n = info_cov.nrows();
        for (m, what) in [
            (&info_cov, "info covariance"),
            (&residual_cov, "residual covariance"),
            (&supply_cov, "supply covariance"),
        ] {
            if m.nrows() != n || m.ncols() != n {
                return Err(EquilibriumError::DimensionMismatch {
                    expected: n,
                    got: m.nrows().max(m.ncols()),
                });
            }
            let dev = relative_asymmetry(m);
            if dev > SYMMETRY_TOL {
                return Err(EquilibriumError::NotSymmetric {
                    what,
                    deviation: dev,
                });
            }
            let (min, _) = symmetric_spectrum(m);
            if min <= 0.0 {
                return Err(EquilibriumError::NotPositiveDefinite {
                    what,
                    eigenvalue: min,
                });
            }
        }
        for v in [&mean_info, &mean_supply] {
            if v.len() != n {
                return Err(EquilibriumError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        let mut params = Self {
            n_assets: n,
            risk_aversion,
            informed_fraction,
            info_cov,
            residual_cov,
            supply_cov,
            mean_info,
            mean_supply,
            condition_ceiling: DEFAULT_CONDITION_CEILING,
        };
        // Inputs are symmetric to tolerance; make them exactly so before any
        // factorization sees them.
        symmetrize(&mut params.info_cov);
        symmetrize(&mut params.residual_cov);
        symmetrize(&mut params.supply_cov);
        Ok(params)
    }

    /// Convenience constructor for uncorrelated-asset economies: diagonal
    /// covariance matrices, zero mean signal, unit mean supply.
    pub fn diagonal(
        risk_aversion: f64,
        informed_fraction: f64,
        info_var: &[f64],
        residual_var: &[f64],
        supply_var: &[f64],
    ) -> Result<Self, EquilibriumError> {
        let n = info_var.len();
        Self::new(
            risk_aversion,
            informed_fraction,
            DMatrix::from_diagonal(&DVector::from_row_slice(info_var)),
            DMatrix::from_diagonal(&DVector::from_row_slice(residual_var)),
            DMatrix::from_diagonal(&DVector::from_row_slice(supply_var)),
            DVector::zeros(n),
            DVector::from_element(n, 1.0),
        )
    }

    pub fn with_condition_ceiling(mut self, ceiling: f64) -> Self {
        self.condition_ceiling = ceiling;
        self
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn risk_aversion(&self) -> f64 {
        self.risk_aversion
    }

    pub fn informed_fraction(&self) -> f64 {
        self.informed_fraction
    }

    pub fn info_cov(&self) -> &DMatrix<f64> {
        &self.info_cov
    }

    pub fn residual_cov(&self) -> &DMatrix<f64> {
        &self.residual_cov
    }

    pub fn supply_cov(&self) -> &DMatrix<f64> {
        &self.supply_cov
    }

    pub fn mean_info(&self) -> &DVector<f64> {
        &self.mean_info
    }

    pub fn mean_supply(&self) -> &DVector<f64> {
        &self.mean_supply
    }

    pub fn condition_ceiling(&self) -> f64 {
        self.condition_ceiling
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<(), EquilibriumError> {
        if v.len() != self.n_assets {
            return Err(EquilibriumError::DimensionMismatch {
                expected: self.n_assets,
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// Closed-form equilibrium objects. The price at date 0 is
/// `P0 = price_intercept + price_slope * (theta - alpha_coef * U * z)`.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    /// `alpha = a / lambda`, the informed-demand aggregation constant.
    pub alpha_coef: f64,
    /// Information asymmetry `N = Var(theta | P0)`.
    pub asymmetry: DMatrix<f64>,
    /// Market-average payoff covariance `Vm`, the harmonic mean of the
    /// informed (`U`) and uninformed (`N + U`) payoff covariances.
    pub avg_cov: DMatrix<f64>,
    /// Price loading `A1` on the composite signal.
    pub price_slope: DMatrix<f64>,
    /// Price intercept `A0`.
    pub price_intercept: DVector<f64>,
    /// Unconditional `Var(P1 - P0)`.
    pub total_return_cov: DMatrix<f64>,
    /// Unconditional `Var(P0)`.
    pub price_cov: DMatrix<f64>,
    /// `Cov(P0, P1 - P0)`.
    pub price_return_cov: DMatrix<f64>,
    /// Residual payoff covariance `U` the solution was built from, carried so
    /// informativeness measures can be read off the solution alone.
    pub residual_cov: DMatrix<f64>,
}

/// Per-investor asset holdings in share counts.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldingsVector {
    pub quantities: DVector<f64>,
}

impl HoldingsVector {
    pub fn len(&self) -> usize {
        self.quantities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quantities.is_empty()
    }
}

/// Numerator choice for the per-asset informativeness measure.
///
/// The measure is `1 - numerator_i / Var(P1 - P0)_ii`. `CondN` takes the
/// conditional signal variance `N_ii` (the form the model text states),
/// `CondNPlusU` the full Gaussian conditional return variance `(N + U)_ii`,
/// and `CondU` the residual variance `U_ii`. Only `CondU` reproduces the
/// published simulation grid's portfolio-weight row, so it is the default;
/// reports always record which variant produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProxyVariant {
    #[default]
    CondU,
    CondN,
    CondNPlusU,
}

impl fmt::Display for ProxyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProxyVariant::CondU => "cond_u",
            ProxyVariant::CondN => "cond_n",
            ProxyVariant::CondNPlusU => "cond_n_plus_u",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown proxy variant {0:?}, expected cond_u | cond_n | cond_n_plus_u")]
pub struct ParseProxyVariantError(String);

impl FromStr for ProxyVariant {
    type Err = ParseProxyVariantError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cond_u" => Ok(ProxyVariant::CondU),
            "cond_n" => Ok(ProxyVariant::CondN),
            "cond_n_plus_u" => Ok(ProxyVariant::CondNPlusU),
            other => Err(ParseProxyVariantError(other.to_string())),
        }
    }
}

/// Harmonic combination of the informed and uninformed payoff covariances:
/// `[lambda * U^-1 + (1 - lambda) * (N + U)^-1]^-1`.
///
/// Exposed separately so the endpoint behavior (`lambda = 1` gives `U`,
/// `lambda = 0` gives `N + U`) can be checked directly; the solver only ever
/// calls it with `lambda > 0`.
pub fn harmonic_payoff_cov(
    informed_fraction: f64,
    residual_cov: &DMatrix<f64>,
    cond_payoff_cov: &DMatrix<f64>,
    ceiling: f64,
) -> Result<DMatrix<f64>, EquilibriumError> {
    let u = SpdMatrix::new(residual_cov.clone(), ceiling, "residual covariance")?;
    let nu = SpdMatrix::new(
        cond_payoff_cov.clone(),
        ceiling,
        "conditional payoff covariance",
    )?;
    let mut vm_inv = u.inverse() * informed_fraction + nu.inverse() * (1.0 - informed_fraction);
    symmetrize(&mut vm_inv);
    let vm = SpdMatrix::new(vm_inv, ceiling, "average payoff precision")?.inverse();
    Ok(vm)
}

/// Solves the equilibrium in closed form.
///
/// With `alpha = a / lambda`:
/// `N  = (T^-1 + alpha^-2 U^-1 Z^-1 U^-1)^-1`
/// `Vm = [lambda U^-1 + (1 - lambda)(N + U)^-1]^-1`
/// `A1 = (T + U - Vm) T^-1`
/// `A0 = (I - A1) E(theta) + [alpha A1 U - a Vm] E(z)`
/// and the price/return covariances follow from the linear structure (the
/// variance of the linear form keeps the transposes: `A1` is not symmetric
/// in general).
pub fn solve_equilibrium(params: &EconomyParams) -> Result<EquilibriumSolution, EquilibriumError> {
    let n = params.n_assets;
    let ceiling = params.condition_ceiling;
    let alpha = params.risk_aversion / params.informed_fraction;

    let t = SpdMatrix::new(params.info_cov.clone(), ceiling, "info covariance")?;
    let u = SpdMatrix::new(params.residual_cov.clone(), ceiling, "residual covariance")?;
    let z = SpdMatrix::new(params.supply_cov.clone(), ceiling, "supply covariance")?;

    // N = (T^-1 + alpha^-2 U^-1 Z^-1 U^-1)^-1
    let u_inv = u.inverse();
    let mut precision = t.inverse() + (&u_inv * z.solve_mat(&u_inv)) * alpha.powi(-2);
    symmetrize(&mut precision);
    let asymmetry = SpdMatrix::new(precision, ceiling, "signal precision given prices")?.inverse();

    let mut cond_payoff_cov = &asymmetry + params.residual_cov();
    symmetrize(&mut cond_payoff_cov);
    let avg_cov = harmonic_payoff_cov(
        params.informed_fraction,
        params.residual_cov(),
        &cond_payoff_cov,
        ceiling,
    )?;

    // A1 = (T + U - Vm) T^-1, computed as a right solve against T.
    let payoff_gap = params.info_cov() + params.residual_cov() - &avg_cov;
    let price_slope = t.solve_mat(&payoff_gap.transpose()).transpose();

    let identity = DMatrix::<f64>::identity(n, n);
    let price_intercept = (&identity - &price_slope) * params.mean_info()
        + ((&price_slope * params.residual_cov()) * alpha - &avg_cov * params.risk_aversion)
            * params.mean_supply();

    // Var(P1 - P0) = (I - A1) T (I - A1)' + alpha^2 A1 U Z U' A1' + U
    let slope_u = &price_slope * params.residual_cov();
    let residual_gap = &identity - &price_slope;
    let mut total_return_cov = &residual_gap * params.info_cov() * residual_gap.transpose()
        + (&slope_u * params.supply_cov() * slope_u.transpose()) * alpha.powi(2)
        + params.residual_cov();
    symmetrize(&mut total_return_cov);

    // Var(P0) = A1 (T + alpha^2 U Z U) A1'
    let mut composite_cov = params.info_cov()
        + (params.residual_cov() * params.supply_cov() * params.residual_cov()) * alpha.powi(2);
    symmetrize(&mut composite_cov);
    let mut price_cov = &price_slope * &composite_cov * price_slope.transpose();
    symmetrize(&mut price_cov);

    // Cov(P0, P1 - P0) = A1 T (I - A1)' - alpha^2 A1 U Z U A1'
    let price_return_cov = &price_slope * params.info_cov() * residual_gap.transpose()
        - (&slope_u * params.supply_cov() * slope_u.transpose()) * alpha.powi(2);

    Ok(EquilibriumSolution {
        alpha_coef: alpha,
        asymmetry,
        avg_cov,
        price_slope,
        price_intercept,
        total_return_cov,
        price_cov,
        price_return_cov,
        residual_cov: params.residual_cov().clone(),
    })
}

/// Unconditional expected holdings of the uninformed group,
/// `(I + lambda U^-1 N)^-1 E(z)`, evaluated through the SPD form
/// `(U + lambda N)^-1 U E(z)`.
pub fn expected_uninformed_holdings(
    sol: &EquilibriumSolution,
    params: &EconomyParams,
) -> Result<HoldingsVector, EquilibriumError> {
    let mut shifted = params.residual_cov() + &sol.asymmetry * params.informed_fraction;
    symmetrize(&mut shifted);
    let shifted = SpdMatrix::new(
        shifted,
        params.condition_ceiling,
        "holdings denominator U + lambda N",
    )?;
    let quantities = shifted.solve_vec(&(params.residual_cov() * params.mean_supply()));
    Ok(HoldingsVector { quantities })
}

/// Per-asset informativeness `1 - numerator_i / Var(P1 - P0)_ii`, the model
/// counterpart of the regression R-squared estimated by the empirical
/// pipeline. The complementary weight `1 - value_i` is what portfolio
/// constructions consume.
pub fn theoretical_proxy_er(sol: &EquilibriumSolution, variant: ProxyVariant) -> Vec<f64> {
    let n = sol.asymmetry.nrows();
    (0..n)
        .map(|i| {
            let numerator = match variant {
                ProxyVariant::CondN => sol.asymmetry[(i, i)],
                ProxyVariant::CondNPlusU => sol.asymmetry[(i, i)] + sol.residual_cov[(i, i)],
                ProxyVariant::CondU => sol.residual_cov[(i, i)],
            };
            1.0 - numerator / sol.total_return_cov[(i, i)]
        })
        .collect()
}

/// Equilibrium price for one realization: `P0 = A0 + A1 (theta - alpha U z)`.
pub fn equilibrium_price(
    sol: &EquilibriumSolution,
    params: &EconomyParams,
    theta: &DVector<f64>,
    supply: &DVector<f64>,
) -> Result<DVector<f64>, EquilibriumError> {
    params.check_len(theta)?;
    params.check_len(supply)?;
    Ok(&sol.price_intercept
        + &sol.price_slope * (theta - params.residual_cov() * supply * sol.alpha_coef))
}

/// Informed CARA demand `a^-1 U^-1 (theta - price)`.
pub fn informed_demand(
    params: &EconomyParams,
    theta: &DVector<f64>,
    price: &DVector<f64>,
) -> Result<HoldingsVector, EquilibriumError> {
    params.check_len(theta)?;
    params.check_len(price)?;
    let u = SpdMatrix::new(
        params.residual_cov().clone(),
        params.condition_ceiling,
        "residual covariance",
    )?;
    let quantities = u.solve_vec(&(theta - price)) / params.risk_aversion;
    Ok(HoldingsVector { quantities })
}

/// Uninformed demand `a^-1 (N + U)^-1 E(P1 - P0 | P0 = price)`, with the
/// conditional payoff mean obtained by Gaussian projection of `P1` on `P0`.
pub fn uninformed_demand(
    sol: &EquilibriumSolution,
    params: &EconomyParams,
    price: &DVector<f64>,
) -> Result<HoldingsVector, EquilibriumError> {
    params.check_len(price)?;
    let kernel = UninformedDemandKernel::new(sol, params)?;
    Ok(kernel.demand(price))
}

/// Precomputed pieces of the uninformed demand map, for Monte-Carlo paths
/// that evaluate the demand once per draw.
pub(crate) struct UninformedDemandKernel {
    /// `Cov(P1, P0) Var(P0)^-1`.
    projection: DMatrix<f64>,
    /// `(a (N + U))^-1`.
    risk_scaling: DMatrix<f64>,
    mean_price: DVector<f64>,
    mean_info: DVector<f64>,
}

impl UninformedDemandKernel {
    pub fn new(
        sol: &EquilibriumSolution,
        params: &EconomyParams,
    ) -> Result<Self, EquilibriumError> {
        let ceiling = params.condition_ceiling;
        let price_cov = SpdMatrix::new(sol.price_cov.clone(), ceiling, "price covariance")?;
        // Cov(P1, P0) = T A1'
        let payoff_price_cov = params.info_cov() * sol.price_slope.transpose();
        let projection = price_cov
            .solve_mat(&payoff_price_cov.transpose())
            .transpose();
        let mut cond_cov = &sol.asymmetry + params.residual_cov();
        symmetrize(&mut cond_cov);
        let cond = SpdMatrix::new(cond_cov, ceiling, "conditional payoff covariance")?;
        let risk_scaling = cond.inverse() / params.risk_aversion;
        let mean_price = &sol.price_intercept
            + &sol.price_slope
                * (params.mean_info()
                    - params.residual_cov() * params.mean_supply() * sol.alpha_coef);
        Ok(Self {
            projection,
            risk_scaling,
            mean_price,
            mean_info: params.mean_info().clone(),
        })
    }

    pub fn demand(&self, price: &DVector<f64>) -> HoldingsVector {
        HoldingsVector {
            quantities: &self.risk_scaling * self.conditional_mean_gain(price),
        }
    }

    /// Conditional expected price change `E(P1 - P0 | P0 = price)`.
    pub fn conditional_mean_gain(&self, price: &DVector<f64>) -> DVector<f64> {
        &self.mean_info + &self.projection * (price - &self.mean_price) - price
    }
}
