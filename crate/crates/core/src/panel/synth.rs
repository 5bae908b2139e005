//! Seeded synthetic generators for every panel the pipeline consumes.
//!
//! Nothing here imitates real data closely; the generators exist so each
//! downstream stage has inputs with *known* ground truth: a daily stock panel
//! whose per-stock informativeness parameter is on record, a repeated
//! one-period equilibrium economy with known optimal portfolios, and a fund
//! panel with known alphas and betas. All generators are pure functions of
//! their seed (ChaCha8 streams, one stream per object).

use std::collections::BTreeMap;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::calendar::YearMonth;
use crate::equilibrium::{
    expected_uninformed_holdings, informed_demand, solve_equilibrium, uninformed_demand,
    EconomyParams, EquilibriumError,
};
use crate::monte_carlo::sample_draws;
use crate::panel::{
    DailyStockPanel, FactorPanel, FactorRow, FundPanel, FundRecord, PanelError, StockRecord,
};

/// Twelve industry codes spanning the SIC hierarchy: shared 3-digit prefixes
/// (3411/3412), shared 2-digit prefixes (2011/2024, 1011/1021), shared top
/// digits, and isolated codes whose higher rings are empty.
const SIC_CYCLE: [u16; 12] = [
    1011, 1021, 2011, 2024, 2911, 3411, 3412, 3499, 5211, 6021, 7011, 8062,
];

const FUND_STYLES: [&str; 7] = ["EDYG", "EDYB", "EDYI", "EDCL", "EDCM", "EDCS", "EDSX"];

/// Parameters of the daily stock generator.
///
/// Log prices are a common market random walk plus a small idiosyncratic walk
/// plus a per-stock transitory component; the informativeness parameter `psi`
/// scales the transitory innovation variance, so the population R-squared of
/// the return-on-lagged-price regression rises strictly with `psi` and is
/// zero at `psi = 0`. Dividing by the market index cancels the common walk,
/// which is what makes the lagged price informative at all.
#[derive(Debug, Clone)]
pub struct DailyPanelConfig {
    pub n_stocks: usize,
    pub n_days: usize,
    /// Uniform sampling interval for per-stock informativeness.
    pub psi_range: (f64, f64),
    pub start_date: NaiveDate,
    /// Total daily volatility of the permanent (random-walk) component.
    pub walk_vol: f64,
    /// Share of the walk variance that is idiosyncratic rather than common.
    pub idio_walk_share: f64,
    /// AR(1) coefficient of the transitory component.
    pub persistence: f64,
    /// Transitory innovation variance = `gain * psi * walk_vol^2`.
    pub transitory_gain: f64,
    /// Log-sd of the constant per-stock capitalization.
    pub cap_log_sd: f64,
}

impl DailyPanelConfig {
    pub fn new(n_stocks: usize, n_days: usize, psi_range: (f64, f64)) -> Self {
        Self {
            n_stocks,
            n_days,
            psi_range,
            start_date: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            walk_vol: 0.02,
            idio_walk_share: 0.02,
            persistence: 0.5,
            transitory_gain: 3.0,
            cap_log_sd: 1.0,
        }
    }

    /// Key/value dump for run metadata.
    pub fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("n_stocks".into(), self.n_stocks.to_string()),
            ("n_days".into(), self.n_days.to_string()),
            (
                "psi_range".into(),
                format!("[{},{}]", self.psi_range.0, self.psi_range.1),
            ),
            ("start_date".into(), self.start_date.to_string()),
            ("walk_vol".into(), self.walk_vol.to_string()),
            ("idio_walk_share".into(), self.idio_walk_share.to_string()),
            ("persistence".into(), self.persistence.to_string()),
            ("transitory_gain".into(), self.transitory_gain.to_string()),
            ("cap_log_sd".into(), self.cap_log_sd.to_string()),
        ]
    }
}

/// Ground truth of a generated daily panel.
#[derive(Debug, Clone)]
pub struct DailyPanelTruth {
    /// Injected informativeness per stock.
    pub psi: BTreeMap<String, f64>,
    pub config: DailyPanelConfig,
}

fn stock_name(i: usize) -> String {
    format!("S{:04}", i + 1)
}

/// Generates a daily stock panel with known informativeness.
pub fn synth_daily_panel(seed: u64, config: &DailyPanelConfig) -> (DailyStockPanel, DailyPanelTruth) {
    assert!(config.n_stocks >= 2, "need at least two stocks");
    assert!(config.n_days >= 300, "need at least 300 days");

    let mut shared = ChaCha8Rng::seed_from_u64(seed);
    shared.set_stream(0);

    let span = config.psi_range.1 - config.psi_range.0;
    let psi: Vec<f64> = (0..config.n_stocks)
        .map(|_| config.psi_range.0 + span * shared.gen::<f64>())
        .collect();
    let caps: Vec<f64> = (0..config.n_stocks)
        .map(|_| {
            let g: f64 = shared.sample(StandardNormal);
            (9.0 + config.cap_log_sd * g).exp() * 1.0e5
        })
        .collect();

    // Common market walk; one extra point so every date has a return.
    let sigma_common = config.walk_vol * (1.0 - config.idio_walk_share).sqrt();
    let sigma_idio = config.walk_vol * config.idio_walk_share.sqrt();
    let mut market = ChaCha8Rng::seed_from_u64(seed);
    market.set_stream(1);
    let common_steps: Vec<f64> = (0..config.n_days)
        .map(|_| {
            let g: f64 = market.sample(StandardNormal);
            sigma_common * g
        })
        .collect();

    let mut records = Vec::with_capacity(config.n_stocks * config.n_days);
    for i in 0..config.n_stocks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2 + i as u64);
        let innov_sd = (config.transitory_gain * psi[i]).sqrt() * config.walk_vol;
        let stationary_sd = if innov_sd > 0.0 {
            innov_sd / (1.0 - config.persistence * config.persistence).sqrt()
        } else {
            0.0
        };
        let g0: f64 = rng.sample(StandardNormal);
        let mut transitory = stationary_sd * g0;
        let id = stock_name(i);
        for d in 0..config.n_days {
            let gi: f64 = rng.sample(StandardNormal);
            let gt: f64 = rng.sample(StandardNormal);
            let idio = sigma_idio * gi;
            let next_transitory = config.persistence * transitory + innov_sd * gt;
            let log_ret = common_steps[d] + idio + (next_transitory - transitory);
            transitory = next_transitory;
            records.push(StockRecord {
                stock_id: id.clone(),
                date: config.start_date + chrono::Days::new(d as u64),
                ret: log_ret.exp() - 1.0,
                cap: caps[i],
                sic: SIC_CYCLE[i % SIC_CYCLE.len()],
            });
        }
    }

    let panel = DailyStockPanel::from_records(records).expect("generated records are valid");
    let truth = DailyPanelTruth {
        psi: (0..config.n_stocks)
            .map(|i| (stock_name(i), psi[i]))
            .collect(),
        config: config.clone(),
    };
    (panel, truth)
}

/// Repeated one-period equilibrium economies.
///
/// Each period is an independent draw; `asset_gains` holds `P1 - P0` per
/// asset. The conditional payoffs apply each group's price-contingent demand
/// to that period's gains, so the clearing identity
/// `market = lambda*informed + (1-lambda)*uninformed` holds path by path;
/// `expected_holdings_payoff` applies the static expected-composition
/// portfolio instead, the tradable benchmark the reference-portfolio
/// construction approximates.
#[derive(Debug, Clone)]
pub struct GsPanel {
    pub n_assets: usize,
    /// periods x n matrix of `P1 - P0`.
    pub asset_gains: DMatrix<f64>,
    /// periods x n matrix of realized supplies.
    pub supplies: DMatrix<f64>,
    /// Price-contingent uninformed strategy payoff per period.
    pub uninformed_payoff: Vec<f64>,
    /// Price-contingent informed strategy payoff per period.
    pub informed_payoff: Vec<f64>,
    /// Realized-supply (market) payoff per period.
    pub market_payoff: Vec<f64>,
    /// Payoff of the static expected uninformed portfolio.
    pub expected_holdings_payoff: Vec<f64>,
}

pub fn synth_gs_panel(
    params: &EconomyParams,
    seed: u64,
    n_periods: usize,
) -> Result<GsPanel, EquilibriumError> {
    let n = params.n_assets();
    let sol = solve_equilibrium(params)?;
    let static_holdings = expected_uninformed_holdings(&sol, params)?;
    let draws = sample_draws(params, &sol, seed, n_periods);

    let mut panel = GsPanel {
        n_assets: n,
        asset_gains: DMatrix::zeros(n_periods, n),
        supplies: DMatrix::zeros(n_periods, n),
        uninformed_payoff: vec![0.0; n_periods],
        informed_payoff: vec![0.0; n_periods],
        market_payoff: vec![0.0; n_periods],
        expected_holdings_payoff: vec![0.0; n_periods],
    };

    let mut price = DVector::<f64>::zeros(n);
    let mut theta = DVector::<f64>::zeros(n);
    for p in 0..n_periods {
        price.copy_from_slice(draws.price0_row(p));
        theta.copy_from_slice(draws.theta_row(p));
        let gains: Vec<f64> = (0..n)
            .map(|j| draws.payoff1_row(p)[j] - draws.price0_row(p)[j])
            .collect();
        let x_ui = uninformed_demand(&sol, params, &price)?;
        let x_i = informed_demand(params, &theta, &price)?;
        for j in 0..n {
            panel.asset_gains[(p, j)] = gains[j];
            panel.supplies[(p, j)] = draws.supply_row(p)[j];
            panel.uninformed_payoff[p] += x_ui.quantities[j] * gains[j];
            panel.informed_payoff[p] += x_i.quantities[j] * gains[j];
            panel.market_payoff[p] += draws.supply_row(p)[j] * gains[j];
            panel.expected_holdings_payoff[p] += static_holdings.quantities[j] * gains[j];
        }
    }
    Ok(panel)
}

/// Parameters of the fund generator. Per-fund alphas and betas are drawn
/// uniformly from the given ranges; monthly net returns follow the factor
/// model exactly up to Gaussian noise of `noise_sd` (zero is allowed).
#[derive(Debug, Clone)]
pub struct FundPanelConfig {
    pub n_funds: usize,
    pub n_months: usize,
    pub noise_sd: f64,
    pub alpha_annual_range: (f64, f64),
    pub beta_market_range: (f64, f64),
    pub factor_beta_range: (f64, f64),
    pub expense_range: (f64, f64),
    pub turnover_range: (f64, f64),
    pub missing_expense_rate: f64,
    pub missing_turnover_rate: f64,
}

impl FundPanelConfig {
    pub fn new(n_funds: usize, n_months: usize) -> Self {
        Self {
            n_funds,
            n_months,
            noise_sd: 0.01,
            alpha_annual_range: (-0.02, 0.02),
            beta_market_range: (0.7, 1.1),
            factor_beta_range: (-0.3, 0.3),
            expense_range: (0.005, 0.02),
            turnover_range: (0.2, 2.0),
            missing_expense_rate: 0.1,
            missing_turnover_rate: 0.1,
        }
    }
}

/// Known loadings of one generated fund.
#[derive(Debug, Clone, Copy)]
pub struct FundTruthRow {
    pub alpha_annual: f64,
    pub beta_market: f64,
    pub beta_smb: f64,
    pub beta_hml: f64,
    pub beta_umd: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FundTruth {
    pub loadings: BTreeMap<String, FundTruthRow>,
}

fn fund_name(i: usize) -> String {
    format!("F{:04}", i + 1)
}

/// Generates a fund panel over the first `n_months` of `factors`.
pub fn synth_fund_panel(
    seed: u64,
    config: &FundPanelConfig,
    factors: &FactorPanel,
) -> Result<(FundPanel, FundTruth), PanelError> {
    if factors.len() < config.n_months {
        return Err(PanelError::Malformed(format!(
            "factor panel covers {} months, need {}",
            factors.len(),
            config.n_months
        )));
    }
    let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.gen::<f64>();

    let mut records = Vec::with_capacity(config.n_funds * config.n_months);
    let mut truth = FundTruth::default();
    for i in 0..config.n_funds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let row = FundTruthRow {
            alpha_annual: uniform(&mut rng, config.alpha_annual_range),
            beta_market: uniform(&mut rng, config.beta_market_range),
            beta_smb: uniform(&mut rng, config.factor_beta_range),
            beta_hml: uniform(&mut rng, config.factor_beta_range),
            beta_umd: uniform(&mut rng, config.factor_beta_range),
        };
        let expense = uniform(&mut rng, config.expense_range);
        let turnover = uniform(&mut rng, config.turnover_range);
        let mut tna = 50.0 * (2.0 * rng.gen::<f64>()).exp();
        let id = fund_name(i);
        let style = FUND_STYLES[i % FUND_STYLES.len()];
        for row_idx in 0..config.n_months {
            let f = &factors.rows()[row_idx];
            let noise: f64 = rng.sample::<f64, _>(StandardNormal) * config.noise_sd;
            let net_ret = f.rf
                + row.alpha_annual / 12.0
                + row.beta_market * f.mkt_excess
                + row.beta_smb * f.smb
                + row.beta_hml * f.hml
                + row.beta_umd * f.umd
                + noise;
            let g: f64 = rng.sample(StandardNormal);
            tna *= (0.05 * g).exp();
            let missing_e = rng.gen::<f64>() < config.missing_expense_rate;
            let missing_t = rng.gen::<f64>() < config.missing_turnover_rate;
            records.push(FundRecord {
                fund_id: id.clone(),
                month: f.month,
                net_ret,
                tna,
                expense: (!missing_e).then_some(expense),
                turnover: (!missing_t).then_some(turnover),
                style: style.to_string(),
                index_flag: None,
            });
        }
        truth.loadings.insert(id, row);
    }
    Ok((FundPanel::from_records(records)?, truth))
}

/// Plausible monthly factor panel for synthetic pipelines.
pub fn synth_factor_panel(seed: u64, start: YearMonth, n_months: usize) -> FactorPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0xFAC7);
    let rows = (0..n_months)
        .map(|k| {
            let g = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
            FactorRow {
                month: start.plus_months(k as i64),
                mkt_excess: 0.006 + 0.045 * g(&mut rng),
                smb: 0.001 + 0.030 * g(&mut rng),
                hml: 0.002 + 0.030 * g(&mut rng),
                umd: 0.005 + 0.040 * g(&mut rng),
                rf: (0.003 + 0.001 * g(&mut rng)).max(0.0),
            }
        })
        .collect();
    FactorPanel::from_rows(rows).expect("contiguous by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn daily_panel_is_deterministic_and_valid() {
        let config = DailyPanelConfig::new(6, 310, (0.0, 0.9));
        let (a, truth_a) = synth_daily_panel(9, &config);
        let (b, truth_b) = synth_daily_panel(9, &config);
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(truth_a.psi, truth_b.psi);
        let (c, _) = synth_daily_panel(10, &config);
        assert_ne!(a.to_csv_string(), c.to_csv_string());
        assert_eq!(a.n_stocks(), 6);
        assert_eq!(a.n_records(), 6 * 310);
        for (_, psi) in &truth_a.psi {
            assert!((0.0..=1.0).contains(psi));
        }
    }

    impl DailyPanelConfig {
        fn psi_at(mut self, v: f64) -> Self {
            self.psi_range = (v, v);
            self
        }
    }

    #[test]
    fn zero_psi_returns_have_no_transitory_component() {
        let config = DailyPanelConfig::new(2, 400, (0.0, 0.9)).psi_at(0.0);
        let (panel, _) = synth_daily_panel(4, &config);
        // With psi = 0 the two stocks differ only via the small idio walk;
        // cross-sectional return correlation should be dominated by the
        // common walk (idio share 2%).
        let a = panel.stock("S0001").unwrap();
        let b = panel.stock("S0002").unwrap();
        let n = a.len() as f64;
        let mean_a = a.iter().map(|r| r.ret).sum::<f64>() / n;
        let mean_b = b.iter().map(|r| r.ret).sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for i in 0..a.len() {
            let da = a[i].ret - mean_a;
            let db = b[i].ret - mean_b;
            cov += da * db;
            va += da * da;
            vb += db * db;
        }
        let corr = cov / (va.sqrt() * vb.sqrt());
        assert!(corr > 0.9, "common-walk correlation {corr}");
    }

    #[test]
    fn gs_panel_satisfies_clearing_identity() {
        let params =
            EconomyParams::diagonal(0.1, 0.4, &[1.0, 1.0], &[1.0, 1.0], &[5.0, 1.0]).unwrap();
        let panel = synth_gs_panel(&params, 31, 2_000).unwrap();
        for p in 0..2_000 {
            let mix = 0.4 * panel.informed_payoff[p] + 0.6 * panel.uninformed_payoff[p];
            assert_relative_eq!(mix, panel.market_payoff[p], epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn informed_strategy_outperforms_uninformed() {
        let params =
            EconomyParams::diagonal(0.1, 0.4, &[1.0, 1.0], &[1.0, 1.0], &[5.0, 1.0]).unwrap();
        let panel = synth_gs_panel(&params, 7, 10_000).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&panel.informed_payoff) > mean(&panel.uninformed_payoff));
    }

    #[test]
    fn noise_free_funds_follow_the_factor_model_exactly() {
        let factors = synth_factor_panel(3, "2000-01".parse().unwrap(), 24);
        let mut config = FundPanelConfig::new(3, 24);
        config.noise_sd = 0.0;
        config.missing_expense_rate = 0.0;
        config.missing_turnover_rate = 0.0;
        let (panel, truth) = synth_fund_panel(17, &config, &factors).unwrap();
        for (id, series) in panel.funds() {
            let t = truth.loadings[id];
            for rec in series {
                let f = factors.get(rec.month).unwrap();
                let expected = f.rf
                    + t.alpha_annual / 12.0
                    + t.beta_market * f.mkt_excess
                    + t.beta_smb * f.smb
                    + t.beta_hml * f.hml
                    + t.beta_umd * f.umd;
                assert_relative_eq!(rec.net_ret, expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn fund_panel_is_seed_deterministic() {
        let factors = synth_factor_panel(3, "2000-01".parse().unwrap(), 12);
        let config = FundPanelConfig::new(4, 12);
        let (a, _) = synth_fund_panel(5, &config, &factors).unwrap();
        let (b, _) = synth_fund_panel(5, &config, &factors).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
    }

    #[test]
    fn identity_regression_on_gs_payoffs() {
        use crate::regression::ols_fit;
        use nalgebra::{DMatrix, DVector};
        let params =
            EconomyParams::diagonal(0.1, 0.4, &[1.0, 1.0], &[1.0, 1.0], &[3.0, 1.0]).unwrap();
        let panel = synth_gs_panel(&params, 2, 300).unwrap();
        let y = DVector::from_row_slice(&panel.uninformed_payoff);
        let x = DMatrix::from_column_slice(300, 1, &panel.uninformed_payoff);
        let fit = ols_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.intercept, 0.0, epsilon = 1e-10);
        assert_relative_eq!(fit.coefficients[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn missingness_pokes_holes_but_validates() {
        let factors = synth_factor_panel(3, "2000-01".parse().unwrap(), 60);
        let mut config = FundPanelConfig::new(5, 60);
        config.missing_expense_rate = 0.5;
        let (panel, _) = synth_fund_panel(5, &config, &factors).unwrap();
        let holes = panel
            .funds()
            .flat_map(|(_, s)| s.iter())
            .filter(|r| r.expense.is_none())
            .count();
        assert!(holes > 0);
    }
}
