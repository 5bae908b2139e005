//! Per-subcommand JSON configurations. Unknown keys are rejected; command
//! line flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult, CommonArgs};

pub fn load<T: Default + for<'de> Deserialize<'de>>(common: &CommonArgs) -> CliResult<T> {
    match &common.config {
        None => Ok(T::default()),
        Some(path) => {
            let raw = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&raw)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

pub fn require_path(
    flag: Option<PathBuf>,
    config_value: &Option<PathBuf>,
    what: &str,
) -> CliResult<PathBuf> {
    flag.or_else(|| config_value.clone())
        .ok_or_else(|| CliError::Config(format!("missing required input: {what}")))
}

pub fn out_dir(common: &CommonArgs) -> PathBuf {
    common.out.clone().unwrap_or_else(|| Path::new(".").into())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub seed: u64,
    pub variant: String,
    pub risk_aversion: f64,
    pub informed_fraction: f64,
    pub clearing_draws: usize,
    pub condvar_draws: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            variant: "cond_u".into(),
            risk_aversion: 0.1,
            informed_fraction: 0.4,
            clearing_draws: uirp_core::monte_carlo::DEFAULT_CLEARING_DRAWS,
            condvar_draws: uirp_core::monte_carlo::DEFAULT_CONDVAR_DRAWS,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    pub stocks: Option<PathBuf>,
    /// Inclusive month range `["YYYY-MM", "YYYY-MM"]`; default every
    /// feasible month.
    pub months: Option<[String; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct BuildUirpConfig {
    pub stocks: Option<PathBuf>,
    pub r2: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    pub funds: Option<PathBuf>,
    pub factors: Option<PathBuf>,
    pub uirp: Option<PathBuf>,
    pub uirp_excess: bool,
    /// Portfolio groups to evaluate; subset of
    /// `all`, `style`, `expense`, `turnover`, `tna`, `selectivity`.
    pub groups: Vec<String>,
    /// Exclude funds whose records ever carry an index flag.
    pub exclude_index_funds: bool,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            funds: None,
            factors: None,
            uirp: None,
            uirp_excess: false,
            groups: ["all", "style", "expense", "turnover", "tna", "selectivity"]
                .map(String::from)
                .to_vec(),
            exclude_index_funds: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_stocks: usize,
    pub n_days: usize,
    pub psi_min: f64,
    pub psi_max: f64,
    pub start_date: String,
    pub n_funds: usize,
    pub fund_noise_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_stocks: 200,
            n_days: 750,
            psi_min: 0.0,
            psi_max: 0.9,
            start_date: "2010-01-01".into(),
            n_funds: 40,
            fund_noise_sd: 0.01,
        }
    }
}
