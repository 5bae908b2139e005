//! Noisy rational-expectations equilibrium engine and reference-portfolio pipeline.
//!
//! The crate has two halves. The model half solves a multi-asset
//! Grossman-Stiglitz economy in closed form ([`equilibrium`]), verifies the
//! solution with a seeded Monte-Carlo oracle ([`monte_carlo`]), and produces
//! the simulation grid relating supply noise to information asymmetry and
//! portfolio weights. The empirical half turns daily stock panels into
//! per-stock information-asymmetry estimates ([`proxy_er`]), builds the
//! uninformed investor's reference portfolio from them ([`uirp`]), and
//! evaluates mutual-fund alphas against that portfolio or the market index
//! ([`performance`]). [`panel`] holds the validated data model, CSV codecs,
//! and seeded synthetic generators that make the empirical half testable
//! without proprietary data.

pub mod calendar;
pub mod equilibrium;
mod linalg;
pub mod monte_carlo;
pub mod panel;
pub mod performance;
pub mod proxy_er;
pub mod regression;
pub mod uirp;

pub use calendar::YearMonth;
pub use chrono::NaiveDate;
pub use equilibrium::{
    solve_equilibrium, EconomyParams, EquilibriumError, EquilibriumSolution, HoldingsVector,
    ProxyVariant,
};
pub use monte_carlo::{sample_draws, Conditioning, DrawSet, EconomyDraw, Table1Report};
pub use regression::{ols_fit, OlsFit, RegressionError};
