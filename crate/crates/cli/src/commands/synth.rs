//! `synth`: seeded synthetic stock, factor, and fund panels with their
//! ground-truth files, sized so the full estimate/build/evaluate chain runs
//! on the output.

use std::fmt::Write as _;

use uirp_core::calendar::YearMonth;
use uirp_core::panel::synth::{
    synth_daily_panel, synth_factor_panel, synth_fund_panel, DailyPanelConfig, FundPanelConfig,
};
use uirp_core::panel::{FactorPanel, FactorRow};
use uirp_core::uirp::market_monthly_returns;

use crate::config::{self, SynthConfig};
use crate::output::OutputSet;
use crate::{CliError, CliResult, CommonArgs};

/// Distinct sub-seed per generated artifact so their generator streams never
/// collide even though every artifact shares the master seed.
fn subseed(master: u64, salt: u64) -> u64 {
    let mut z = master
        .wrapping_add(salt.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn run(common: &CommonArgs) -> CliResult<()> {
    let mut cfg: SynthConfig = config::load(common)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if cfg.n_stocks < 2 {
        return Err(CliError::config("n_stocks must be at least 2"));
    }
    if cfg.n_days < 300 {
        return Err(CliError::config("n_days must be at least 300"));
    }
    if !(0.0 <= cfg.psi_min && cfg.psi_min <= cfg.psi_max && cfg.psi_max <= 1.0) {
        return Err(CliError::config("psi range must satisfy 0 <= min <= max <= 1"));
    }
    let start_date: uirp_core::NaiveDate = cfg
        .start_date
        .parse()
        .map_err(|_| CliError::Config(format!("bad start_date {:?}", cfg.start_date)))?;

    let mut daily_config =
        DailyPanelConfig::new(cfg.n_stocks, cfg.n_days, (cfg.psi_min, cfg.psi_max));
    daily_config.start_date = start_date;
    let (stocks, truth) = synth_daily_panel(subseed(cfg.seed, 1), &daily_config);

    let first_month = YearMonth::from_date(stocks.first_date().expect("non-empty"));
    let last_month = YearMonth::from_date(stocks.last_date().expect("non-empty"));
    let n_months = (last_month.months_since(first_month) + 1) as usize;
    // Factor months align with the stock panel, and the market factor IS the
    // panel's cap-weighted return (in excess of the generated risk-free
    // rate), so funds, factors, and the reference portfolio share one
    // market. SMB/HML/UMD stay synthetic long-short noise series.
    let template = synth_factor_panel(subseed(cfg.seed, 2), first_month, n_months);
    let market = market_monthly_returns(&stocks);
    let rows: Vec<FactorRow> = template
        .rows()
        .iter()
        .map(|f| FactorRow {
            mkt_excess: market.get(&f.month).copied().unwrap_or(0.0) - f.rf,
            ..f.clone()
        })
        .collect();
    let factors = FactorPanel::from_rows(rows).map_err(anyhow::Error::from)?;

    let mut fund_config = FundPanelConfig::new(cfg.n_funds, n_months);
    fund_config.noise_sd = cfg.fund_noise_sd;
    let (funds, fund_truth) = synth_fund_panel(subseed(cfg.seed, 3), &fund_config, &factors)
        .map_err(anyhow::Error::from)?;

    let mut psi_csv = String::from("stock_id,psi\n");
    for (id, psi) in &truth.psi {
        writeln!(psi_csv, "{id},{psi}").unwrap();
    }
    let mut fund_csv = String::from("fund_id,alpha_annual,beta_market,beta_smb,beta_hml,beta_umd\n");
    for (id, row) in &fund_truth.loadings {
        writeln!(
            fund_csv,
            "{id},{},{},{},{},{}",
            row.alpha_annual, row.beta_market, row.beta_smb, row.beta_hml, row.beta_umd
        )
        .unwrap();
    }

    let notes: Vec<String> = daily_config
        .metadata()
        .into_iter()
        .map(|(k, v)| format!("daily generator {k} = {v}"))
        .collect();

    let mut out = OutputSet::new(config::out_dir(common));
    out.add("stocks.csv", stocks.to_csv_string());
    out.add("factors.csv", factors.to_csv_string());
    out.add("funds.csv", funds.to_csv_string());
    out.add("synth_truth_psi.csv", psi_csv);
    out.add("synth_truth_funds.csv", fund_csv);
    out.add_run_meta("synth", &cfg, Some(cfg.seed), &notes);
    out.commit()
}
