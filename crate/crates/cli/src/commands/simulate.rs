//! `simulate-table1`: the analytic simulation grid plus its Monte-Carlo
//! verification report.

use uirp_core::equilibrium::ProxyVariant;
use uirp_core::monte_carlo::{mc_verification_report, table1_report, Table1Spec};

use crate::config::{self, SimulateConfig};
use crate::output::OutputSet;
use crate::{CliError, CliResult, CommonArgs};

pub fn run(common: &CommonArgs) -> CliResult<()> {
    let mut cfg: SimulateConfig = config::load(common)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(v) = &common.variant {
        cfg.variant = v.clone();
    }
    let variant: ProxyVariant = cfg
        .variant
        .parse()
        .map_err(|e: uirp_core::equilibrium::ParseProxyVariantError| {
            CliError::Config(e.to_string())
        })?;
    if !(cfg.risk_aversion > 0.0) {
        return Err(CliError::config("risk_aversion must be positive"));
    }
    if !(cfg.informed_fraction > 0.0 && cfg.informed_fraction <= 1.0) {
        return Err(CliError::config("informed_fraction must lie in (0, 1]"));
    }
    if cfg.clearing_draws == 0 || cfg.condvar_draws == 0 {
        return Err(CliError::config("draw counts must be positive"));
    }

    let spec = Table1Spec {
        risk_aversion: cfg.risk_aversion,
        informed_fraction: cfg.informed_fraction,
        variant,
        seed: cfg.seed,
        z11_max: 10,
    };
    let table = table1_report(&spec).map_err(anyhow::Error::from)?;
    let mc = mc_verification_report(&spec, cfg.clearing_draws, cfg.condvar_draws)
        .map_err(anyhow::Error::from)?;

    let mut out = OutputSet::new(config::out_dir(common));
    out.add("table1.csv", table.to_csv());
    out.add("mc_report.csv", mc.to_csv());
    out.add_run_meta("simulate-table1", &cfg, Some(cfg.seed), &table.notes);
    out.commit()
}
