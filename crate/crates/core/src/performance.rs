//! Fund performance evaluation against the market or the reference portfolio.
//!
//! Portfolios of funds are TNA-weighted with the previous month's assets, so
//! funds that die stay in the sample until they do. Alphas come from the
//! excess-return regression: the market reference enters in excess of the
//! risk-free rate, the reference portfolio enters as a raw return (its
//! construction already embodies the uninformed investor's opportunity set;
//! an excess-return switch exists for sensitivity analysis). Alphas are
//! annualized as 12 times the monthly intercept.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::calendar::YearMonth;
use crate::panel::{FactorPanel, FundPanel, FundRecord};
use crate::regression::{ols_fit, OlsFit, RegressionError};
use crate::uirp::UirpSeries;

/// Months required before an alpha is reported.
pub const MIN_ALPHA_MONTHS: usize = 24;

/// Months required in a selectivity window (of the 36 possible).
pub const MIN_SELECTIVITY_MONTHS: usize = 30;

/// Selectivity window length in months.
pub const SELECTIVITY_WINDOW: i64 = 36;

#[derive(Debug, thiserror::Error)]
pub enum PerfError {
    #[error("need {needed} overlapping months, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("regression design is rank deficient")]
    RankDeficient,
    #[error("model references the reference portfolio but no series was supplied")]
    MissingUirp,
}

impl From<RegressionError> for PerfError {
    fn from(e: RegressionError) -> Self {
        match e {
            RegressionError::RankDeficient => PerfError::RankDeficient,
            RegressionError::InsufficientData { needed, got, .. } => {
                PerfError::InsufficientData { needed, got }
            }
        }
    }
}

/// Optional factor-mimicking regressors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Smb,
    Hml,
    Umd,
}

impl Factor {
    pub const CARHART: [Factor; 3] = [Factor::Smb, Factor::Hml, Factor::Umd];

    fn value(&self, row: &crate::panel::FactorRow) -> f64 {
        match self {
            Factor::Smb => row.smb,
            Factor::Hml => row.hml,
            Factor::Umd => row.umd,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Factor::Smb => "smb",
            Factor::Hml => "hml",
            Factor::Umd => "umd",
        })
    }
}

/// Reference portfolio of the one-factor leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    Market,
    Uirp,
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reference::Market => "market",
            Reference::Uirp => "uirp",
        })
    }
}

/// A performance model: reference leg plus optional factor legs.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub reference: Reference,
    pub factors: Vec<Factor>,
    /// Enter the reference portfolio net of the risk-free rate (sensitivity
    /// switch; off reproduces the headline convention).
    pub uirp_excess: bool,
}

impl ModelSpec {
    pub fn one_factor(reference: Reference) -> Self {
        Self {
            reference,
            factors: Vec::new(),
            uirp_excess: false,
        }
    }

    pub fn four_factor(reference: Reference) -> Self {
        Self {
            reference,
            factors: Factor::CARHART.to_vec(),
            uirp_excess: false,
        }
    }

    pub fn factors_label(&self) -> String {
        self.factors
            .iter()
            .map(Factor::to_string)
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Monthly returns of a fund portfolio plus the months that had no members.
#[derive(Debug, Clone, Default)]
pub struct PortfolioSeries {
    pub returns: BTreeMap<YearMonth, f64>,
    pub skipped_months: Vec<YearMonth>,
}

/// TNA-weighted portfolio over the funds admitted by `member`.
///
/// A fund contributes in month `t` when the rule admits it, it has a return
/// at `t`, and it has strictly positive TNA at `t-1` (the lagged weight).
pub fn tna_weighted_portfolio<F>(funds: &FundPanel, member: F) -> PortfolioSeries
where
    F: Fn(&str, YearMonth) -> bool,
{
    let mut series = PortfolioSeries::default();
    for month in funds.months() {
        let prev = month.minus_months(1);
        let mut weight = 0.0;
        let mut weighted = 0.0;
        for (id, _) in funds.funds() {
            if !member(id, month) {
                continue;
            }
            let (Some(rec), Some(lag)) = (funds.record(id, month), funds.record(id, prev)) else {
                continue;
            };
            if lag.tna > 0.0 {
                weight += lag.tna;
                weighted += lag.tna * rec.net_ret;
            }
        }
        if weight > 0.0 {
            series.returns.insert(month, weighted / weight);
        } else {
            series.skipped_months.push(month);
        }
    }
    series
}

/// Ranking characteristic for decile portfolios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Characteristic {
    /// Current month's expense ratio, missing values filled with the fund's
    /// last available one.
    Expense,
    /// Current month's turnover ratio.
    Turnover,
    /// Previous month's total net assets.
    Tna,
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Characteristic::Expense => "expense",
            Characteristic::Turnover => "turnover",
            Characteristic::Tna => "tna",
        })
    }
}

/// Expense value at each fund record after carry-forward of the last
/// available observation.
fn carried_expense(series: &[FundRecord]) -> Vec<Option<f64>> {
    let mut last = None;
    series
        .iter()
        .map(|r| {
            if r.expense.is_some() {
                last = r.expense;
            }
            last
        })
        .collect()
}

/// Decile membership per month: `assignments[month][fund] = decile index`.
fn decile_assignments(
    funds: &FundPanel,
    characteristic: Characteristic,
) -> BTreeMap<YearMonth, BTreeMap<String, usize>> {
    // Pre-compute per-fund characteristic value per month.
    let mut values: BTreeMap<YearMonth, Vec<(String, f64)>> = BTreeMap::new();
    for (id, series) in funds.funds() {
        let expenses = carried_expense(series);
        for (k, rec) in series.iter().enumerate() {
            let value = match characteristic {
                Characteristic::Expense => expenses[k],
                Characteristic::Turnover => rec.turnover,
                Characteristic::Tna => funds
                    .record(id, rec.month.minus_months(1))
                    .map(|prev| prev.tna),
            };
            if let Some(v) = value {
                values
                    .entry(rec.month)
                    .or_default()
                    .push((id.to_string(), v));
            }
        }
    }

    let mut assignments = BTreeMap::new();
    for (month, mut ranked) in values {
        ranked.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        let n = ranked.len();
        let month_map: BTreeMap<String, usize> = ranked
            .into_iter()
            .enumerate()
            .map(|(i, (id, _))| {
                // rank r of n maps to decile ceil(10 r / n), 1-based rank
                let decile = (10 * (i + 1)).div_ceil(n) - 1;
                (id, decile)
            })
            .collect();
        assignments.insert(month, month_map);
    }
    assignments
}

/// Ten TNA-weighted portfolios from a monthly characteristic ranking.
pub fn decile_portfolios(
    funds: &FundPanel,
    characteristic: Characteristic,
) -> Vec<PortfolioSeries> {
    let assignments = decile_assignments(funds, characteristic);
    (0..10)
        .map(|d| {
            tna_weighted_portfolio(funds, |id, month| {
                assignments
                    .get(&month)
                    .and_then(|m| m.get(id))
                    .is_some_and(|&decile| decile == d)
            })
        })
        .collect()
}

/// One fund's R² against the factor models over a three-year window.
#[derive(Debug, Clone)]
pub struct SelectivityRow {
    pub fund_id: String,
    pub window_start: YearMonth,
    pub r2_one_factor: f64,
    pub r2_four_factor: f64,
    pub n_obs: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SelectivityPanel {
    pub rows: Vec<SelectivityRow>,
}

impl SelectivityPanel {
    /// Selectivity value in force at `month`: the R² of the most recent
    /// window that ended on or before it (updated each period).
    pub fn value_asof(&self, fund_id: &str, month: YearMonth, four_factor: bool) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| {
                r.fund_id == fund_id && r.window_start.plus_months(SELECTIVITY_WINDOW) <= month
            })
            .max_by_key(|r| r.window_start)
            .map(|r| {
                if four_factor {
                    r.r2_four_factor
                } else {
                    r.r2_one_factor
                }
            })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("fund_id,window_start,n_obs,r2_1f,r2_4f\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.fund_id, r.window_start, r.n_obs, r.r2_one_factor, r.r2_four_factor
            )
            .unwrap();
        }
        out
    }
}

/// R² of each fund against the one- and four-factor models over nonoverlapping
/// three-year windows anchored at the fund's first month. Windows with fewer
/// than 30 usable months are skipped.
pub fn selectivity_r2(funds: &FundPanel, factors: &FactorPanel) -> SelectivityPanel {
    let mut panel = SelectivityPanel::default();
    for (id, series) in funds.funds() {
        let first = series[0].month;
        let last = series[series.len() - 1].month;
        let mut window_start = first;
        while window_start <= last {
            let window_end = window_start.plus_months(SELECTIVITY_WINDOW);
            let mut y = Vec::new();
            let mut x = Vec::new();
            for rec in series
                .iter()
                .filter(|r| r.month >= window_start && r.month < window_end)
            {
                if let Some(f) = factors.get(rec.month) {
                    y.push(rec.net_ret - f.rf);
                    x.push([f.mkt_excess, f.smb, f.hml, f.umd]);
                }
            }
            if y.len() >= MIN_SELECTIVITY_MONTHS {
                let n = y.len();
                let response = DVector::from_vec(y);
                let one = DMatrix::from_fn(n, 1, |i, _| x[i][0]);
                let four = DMatrix::from_fn(n, 4, |i, j| x[i][j]);
                if let (Ok(f1), Ok(f4)) = (ols_fit(&one, &response), ols_fit(&four, &response)) {
                    panel.rows.push(SelectivityRow {
                        fund_id: id.to_string(),
                        window_start,
                        r2_one_factor: f1.r_squared,
                        r2_four_factor: f4.r_squared,
                        n_obs: n,
                    });
                }
            }
            window_start = window_end;
        }
    }
    panel
}

/// A fitted performance model for one portfolio.
#[derive(Debug, Clone)]
pub struct PerformanceReport {
    pub portfolio: String,
    pub reference: Reference,
    pub factors: Vec<Factor>,
    pub uirp_excess: bool,
    /// 12 times the monthly intercept, in return units per year.
    pub alpha_annual: f64,
    pub t_alpha: f64,
    pub beta_ref: f64,
    pub t_ref: f64,
    /// Betas and t-statistics of the optional factors, in `factors` order.
    pub factor_betas: Vec<(Factor, f64, f64)>,
    pub r_squared: f64,
    pub n_months: usize,
}

/// Fits one performance model to a monthly return series.
///
/// The dependent variable is the portfolio return net of the risk-free rate;
/// the reference leg is the market excess return or the reference-portfolio
/// return, plus any requested factor legs. Months must overlap in the series,
/// the factor panel, and (when referenced) the reference-portfolio series.
pub fn alpha_report(
    portfolio: &str,
    series: &BTreeMap<YearMonth, f64>,
    factors: &FactorPanel,
    uirp: Option<&UirpSeries>,
    spec: &ModelSpec,
) -> Result<PerformanceReport, PerfError> {
    let mut months = Vec::new();
    for (&month, &ret) in series {
        let Some(f) = factors.get(month) else {
            continue;
        };
        let reference = match spec.reference {
            Reference::Market => f.mkt_excess,
            Reference::Uirp => {
                let u = uirp.ok_or(PerfError::MissingUirp)?;
                let Some(row) = u.get(month) else { continue };
                if spec.uirp_excess {
                    row.uirp_ret - f.rf
                } else {
                    row.uirp_ret
                }
            }
        };
        months.push((ret - f.rf, reference, f));
    }
    if months.len() < MIN_ALPHA_MONTHS {
        return Err(PerfError::InsufficientData {
            needed: MIN_ALPHA_MONTHS,
            got: months.len(),
        });
    }

    let n = months.len();
    let k = 1 + spec.factors.len();
    let mut design = DMatrix::<f64>::zeros(n, k);
    let mut response = DVector::<f64>::zeros(n);
    for (i, (y, reference, f)) in months.iter().enumerate() {
        response[i] = *y;
        design[(i, 0)] = *reference;
        for (j, factor) in spec.factors.iter().enumerate() {
            design[(i, 1 + j)] = factor.value(f);
        }
    }
    let fit: OlsFit = ols_fit(&design, &response)?;

    Ok(PerformanceReport {
        portfolio: portfolio.to_string(),
        reference: spec.reference,
        factors: spec.factors.clone(),
        uirp_excess: spec.uirp_excess,
        alpha_annual: 12.0 * fit.intercept,
        t_alpha: fit.t_stats[0],
        beta_ref: fit.coefficients[0],
        t_ref: fit.t_stats[1],
        factor_betas: spec
            .factors
            .iter()
            .enumerate()
            .map(|(j, &f)| (f, fit.coefficients[1 + j], fit.t_stats[2 + j]))
            .collect(),
        r_squared: fit.r_squared,
        n_months: n,
    })
}

/// CSV with one row per fitted model; factor columns are empty when the
/// model omits the factor.
pub fn reports_to_csv(reports: &[PerformanceReport]) -> String {
    let mut out = String::from(
        "portfolio,reference,factors,alpha_annual,t_alpha,beta_ref,r2,n_months,beta_smb,t_smb,beta_hml,t_hml,beta_umd,t_umd\n",
    );
    for r in reports {
        let mut cells = vec![String::new(); 6];
        for (factor, beta, t) in &r.factor_betas {
            let base = match factor {
                Factor::Smb => 0,
                Factor::Hml => 2,
                Factor::Umd => 4,
            };
            cells[base] = beta.to_string();
            cells[base + 1] = t.to_string();
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.portfolio,
            r.reference,
            ModelSpec {
                reference: r.reference,
                factors: r.factors.clone(),
                uirp_excess: r.uirp_excess,
            }
            .factors_label(),
            r.alpha_annual,
            r.t_alpha,
            r.beta_ref,
            r.r_squared,
            r.n_months,
            cells.join(","),
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::synth::synth_factor_panel;
    use crate::uirp::{UirpRow, UirpSeries};
    use approx::assert_relative_eq;

    fn fund_rec(id: &str, month: &str, ret: f64, tna: f64) -> FundRecord {
        FundRecord {
            fund_id: id.into(),
            month: month.parse().unwrap(),
            net_ret: ret,
            tna,
            expense: None,
            turnover: None,
            style: "EDYG".into(),
            index_flag: None,
        }
    }

    #[test]
    fn lagged_tna_weighting() {
        let funds = FundPanel::from_records(vec![
            fund_rec("A", "2001-01", 0.0, 100.0),
            fund_rec("A", "2001-02", 0.01, 110.0),
            fund_rec("B", "2001-01", 0.0, 300.0),
            fund_rec("B", "2001-02", 0.03, 310.0),
        ])
        .unwrap();
        let series = tna_weighted_portfolio(&funds, |_, _| true);
        let feb = series.returns[&"2001-02".parse().unwrap()];
        assert_relative_eq!(feb, 0.025, epsilon = 1e-15);
        // January has no prior TNA for anyone: skipped
        assert!(series
            .skipped_months
            .contains(&"2001-01".parse().unwrap()));
    }

    #[test]
    fn fund_entering_waits_one_month() {
        let funds = FundPanel::from_records(vec![
            fund_rec("A", "2001-01", 0.0, 100.0),
            fund_rec("A", "2001-02", 0.01, 100.0),
            fund_rec("A", "2001-03", 0.01, 100.0),
            // B enters in February; first weighted month is March
            fund_rec("B", "2001-02", 0.99, 900.0),
            fund_rec("B", "2001-03", 0.05, 900.0),
        ])
        .unwrap();
        let series = tna_weighted_portfolio(&funds, |_, _| true);
        assert_relative_eq!(
            series.returns[&"2001-02".parse().unwrap()],
            0.01,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            series.returns[&"2001-03".parse().unwrap()],
            (100.0 * 0.01 + 900.0 * 0.05) / 1000.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn single_fund_portfolio_is_that_fund() {
        let funds = FundPanel::from_records(vec![
            fund_rec("A", "2001-01", 0.0, 100.0),
            fund_rec("A", "2001-02", 0.017, 101.0),
            fund_rec("A", "2001-03", -0.004, 99.0),
        ])
        .unwrap();
        let series = tna_weighted_portfolio(&funds, |id, _| id == "A");
        assert_relative_eq!(
            series.returns[&"2001-02".parse().unwrap()],
            0.017,
            epsilon = 0.0
        );
        assert_relative_eq!(
            series.returns[&"2001-03".parse().unwrap()],
            -0.004,
            epsilon = 0.0
        );
    }

    #[test]
    fn twenty_funds_make_two_per_decile() {
        let mut records = Vec::new();
        for i in 0..20 {
            let id = format!("F{i:02}");
            let mut rec = fund_rec(&id, "2001-01", 0.0, 100.0);
            rec.expense = Some(0.001 * (i + 1) as f64);
            records.push(rec.clone());
            let mut rec2 = fund_rec(&id, "2001-02", 0.01, 100.0);
            rec2.expense = Some(0.001 * (i + 1) as f64);
            records.push(rec2);
        }
        let funds = FundPanel::from_records(records).unwrap();
        let assignments = decile_assignments(&funds, Characteristic::Expense);
        let feb = &assignments[&"2001-02".parse().unwrap()];
        let mut counts = [0usize; 10];
        for &d in feb.values() {
            counts[d] += 1;
        }
        assert_eq!(counts, [2; 10]);
        // partition: every ranked fund is in exactly one decile
        assert_eq!(feb.len(), 20);
    }

    #[test]
    fn expense_carry_forward_fills_gaps() {
        let mut a1 = fund_rec("A", "2001-01", 0.0, 100.0);
        a1.expense = Some(0.012);
        let a2 = fund_rec("A", "2001-02", 0.01, 100.0); // missing expense
        let mut b1 = fund_rec("B", "2001-01", 0.0, 100.0);
        b1.expense = Some(0.005);
        let mut b2 = fund_rec("B", "2001-02", 0.01, 100.0);
        b2.expense = Some(0.005);
        let funds = FundPanel::from_records(vec![a1, a2, b1, b2]).unwrap();
        let assignments = decile_assignments(&funds, Characteristic::Expense);
        let feb = &assignments[&"2001-02".parse().unwrap()];
        // A carried 0.012 > B 0.005, so A lands in the top decile
        assert_eq!(feb["A"], 9);
        assert_eq!(feb["B"], 4);
    }

    #[test]
    fn identical_characteristics_tie_break_lexicographically() {
        let mut records = Vec::new();
        for id in ["A", "B", "C", "D"] {
            let mut rec = fund_rec(id, "2001-01", 0.0, 100.0);
            rec.turnover = Some(1.0);
            records.push(rec);
        }
        let funds = FundPanel::from_records(records).unwrap();
        let assignments = decile_assignments(&funds, Characteristic::Turnover);
        let jan = &assignments[&"2001-01".parse().unwrap()];
        // ceil(10*r/4) for r=1..4 -> deciles 3,5,8,10 (0-based 2,4,7,9)
        assert_eq!(jan["A"], 2);
        assert_eq!(jan["B"], 4);
        assert_eq!(jan["C"], 7);
        assert_eq!(jan["D"], 9);
    }

    #[test]
    fn market_tracker_has_unit_selectivity_r2() {
        let factors = synth_factor_panel(3, "2000-01".parse().unwrap(), 40);
        let records: Vec<FundRecord> = factors.rows()[..36]
            .iter()
            .map(|f| fund_rec("T", &f.month.to_string(), f.rf + f.mkt_excess, 100.0))
            .collect();
        let funds = FundPanel::from_records(records).unwrap();
        let panel = selectivity_r2(&funds, &factors);
        assert_eq!(panel.rows.len(), 1);
        assert_relative_eq!(panel.rows[0].r2_one_factor, 1.0, epsilon = 1e-10);
        assert_relative_eq!(panel.rows[0].r2_four_factor, 1.0, epsilon = 1e-10);
        assert_eq!(panel.rows[0].n_obs, 36);
        // the window's value governs months after it ends
        assert!(panel
            .value_asof("T", "2003-01".parse().unwrap(), false)
            .is_some());
        assert!(panel
            .value_asof("T", "2002-12".parse().unwrap(), false)
            .is_none());
    }

    #[test]
    fn short_window_is_skipped() {
        let factors = synth_factor_panel(3, "2000-01".parse().unwrap(), 40);
        let records: Vec<FundRecord> = factors.rows()[..29]
            .iter()
            .map(|f| fund_rec("S", &f.month.to_string(), f.rf + f.mkt_excess, 100.0))
            .collect();
        let funds = FundPanel::from_records(records).unwrap();
        let panel = selectivity_r2(&funds, &factors);
        assert!(panel.rows.is_empty());
    }

    #[test]
    fn exact_linear_fund_recovers_alpha_and_beta() {
        let factors = synth_factor_panel(5, "2000-01".parse().unwrap(), 48);
        let series: BTreeMap<YearMonth, f64> = factors
            .rows()
            .iter()
            .map(|f| (f.month, f.rf + 0.012 / 12.0 + 0.9 * f.mkt_excess))
            .collect();
        let report = alpha_report(
            "constructed",
            &series,
            &factors,
            None,
            &ModelSpec::one_factor(Reference::Market),
        )
        .unwrap();
        assert_relative_eq!(report.alpha_annual, 0.012, epsilon = 1e-10);
        assert_relative_eq!(report.beta_ref, 0.9, epsilon = 1e-10);
        assert_relative_eq!(report.r_squared, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn uirp_identity_regression_with_zero_rf() {
        let mut factors = synth_factor_panel(5, "2000-01".parse().unwrap(), 36)
            .rows()
            .to_vec();
        for f in &mut factors {
            f.rf = 0.0;
        }
        let factors = FactorPanel::from_rows(factors).unwrap();
        let uirp_rows: Vec<UirpRow> = factors
            .rows()
            .iter()
            .map(|f| UirpRow {
                month: f.month,
                uirp_ret: 0.8 * f.mkt_excess + 0.001,
                covered_cap_share: 1.0,
                deviation: Some(0.05),
            })
            .collect();
        let uirp = UirpSeries::from_rows(uirp_rows);
        let series: BTreeMap<YearMonth, f64> = uirp
            .rows()
            .iter()
            .map(|r| (r.month, r.uirp_ret))
            .collect();
        let report = alpha_report(
            "self",
            &series,
            &factors,
            Some(&uirp),
            &ModelSpec::one_factor(Reference::Uirp),
        )
        .unwrap();
        assert_relative_eq!(report.alpha_annual, 0.0, epsilon = 1e-12);
        assert_relative_eq!(report.beta_ref, 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn insufficient_overlap_is_reported() {
        let factors = synth_factor_panel(5, "2000-01".parse().unwrap(), 12);
        let series: BTreeMap<YearMonth, f64> = factors
            .rows()
            .iter()
            .map(|f| (f.month, f.mkt_excess))
            .collect();
        assert!(matches!(
            alpha_report(
                "short",
                &series,
                &factors,
                None,
                &ModelSpec::one_factor(Reference::Market)
            ),
            Err(PerfError::InsufficientData { needed: 24, got: 12 })
        ));
    }

    #[test]
    fn tna_rescaling_leaves_everything_unchanged() {
        let factors = synth_factor_panel(7, "2000-01".parse().unwrap(), 30);
        let mut records = Vec::new();
        for (i, f) in factors.rows().iter().enumerate() {
            for (id, beta) in [("A", 0.8), ("B", 1.1)] {
                let mut rec = fund_rec(
                    id,
                    &f.month.to_string(),
                    f.rf + beta * f.mkt_excess,
                    100.0 + i as f64 * if id == "A" { 3.0 } else { 7.0 },
                );
                rec.expense = Some(if id == "A" { 0.01 } else { 0.02 });
                records.push(rec);
            }
        }
        let base_panel = FundPanel::from_records(records.clone()).unwrap();
        let scaled_panel = FundPanel::from_records(
            records
                .into_iter()
                .map(|mut r| {
                    r.tna *= 1.0e7;
                    r
                })
                .collect(),
        )
        .unwrap();
        let base = tna_weighted_portfolio(&base_panel, |_, _| true);
        let scaled = tna_weighted_portfolio(&scaled_panel, |_, _| true);
        for (m, v) in &base.returns {
            assert_relative_eq!(scaled.returns[m], v, epsilon = 1e-12);
        }
        let d1 = decile_assignments(&base_panel, Characteristic::Tna);
        let d2 = decile_assignments(&scaled_panel, Characteristic::Tna);
        assert_eq!(d1, d2);
    }
}
