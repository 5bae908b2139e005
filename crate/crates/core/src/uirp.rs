//! Monthly reference-portfolio construction for the uninformed investor.
//!
//! The portfolio reweights the market: a stock with informativeness estimate
//! `R²` gets weight proportional to `(1 - R²) * K`, where `K` is its
//! capitalization entering the month. Stocks without an estimate this month
//! form a plain cap-weighted bucket, and the final return is the
//! cap-weighted average of the two buckets. The deviation statistic
//! `sum(R² K) / sum(K)` measures how far the portfolio tilts away from the
//! market.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::calendar::YearMonth;
use crate::panel::{DailyStockPanel, PanelError};
use crate::proxy_er::RSquaredPanel;

#[derive(Debug, thiserror::Error)]
pub enum UirpError {
    #[error("no stock has a return in {0}")]
    EmptyMonth(YearMonth),
}

/// One month of the reference portfolio.
#[derive(Debug, Clone)]
pub struct UirpRow {
    pub month: YearMonth,
    pub uirp_ret: f64,
    /// Fraction of total capitalization with an available R² this month.
    pub covered_cap_share: f64,
    /// Cap-weighted mean R² over covered stocks; missing when none covered.
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct UirpSeries {
    rows: Vec<UirpRow>,
}

impl UirpSeries {
    pub fn from_rows(mut rows: Vec<UirpRow>) -> Self {
        rows.sort_by_key(|r| r.month);
        Self { rows }
    }

    pub fn rows(&self) -> &[UirpRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, month: YearMonth) -> Option<&UirpRow> {
        self.rows
            .binary_search_by_key(&month, |r| r.month)
            .ok()
            .map(|i| &self.rows[i])
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("month,uirp_ret,covered_cap_share,deviation\n");
        for r in &self.rows {
            let deviation = r.deviation.map(|d| d.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{}",
                r.month, r.uirp_ret, r.covered_cap_share, deviation
            )
            .unwrap();
        }
        out
    }
}

/// Loads `uirp.csv` (`month,uirp_ret,covered_cap_share,deviation`).
pub fn load_uirp_csv(path: impl AsRef<Path>) -> Result<UirpSeries, PanelError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let got = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != "month,uirp_ret,covered_cap_share,deviation" {
        return Err(PanelError::Schema {
            expected: "month,uirp_ret,covered_cap_share,deviation",
            got,
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let parse = |field: &'static str, raw: &str| -> Result<f64, PanelError> {
            raw.parse().map_err(|_| PanelError::Parse {
                row,
                field,
                value: raw.to_string(),
            })
        };
        let month_raw = rec.get(0).unwrap_or_default();
        let deviation_raw = rec.get(3).unwrap_or_default();
        rows.push(UirpRow {
            month: month_raw.parse().map_err(|_| PanelError::Parse {
                row,
                field: "month",
                value: month_raw.to_string(),
            })?,
            uirp_ret: parse("uirp_ret", rec.get(1).unwrap_or_default())?,
            covered_cap_share: parse("covered_cap_share", rec.get(2).unwrap_or_default())?,
            deviation: if deviation_raw.is_empty() {
                None
            } else {
                Some(parse("deviation", deviation_raw)?)
            },
        });
    }
    Ok(UirpSeries::from_rows(rows))
}

/// Compounded within-month return and entering capitalization per stock.
///
/// `K` is the last capitalization on record before the month starts (the
/// previous-month-end value when the stock traded then); stocks entering
/// mid-sample fall back to their first in-month capitalization.
fn month_constituents(
    panel: &DailyStockPanel,
    month: YearMonth,
) -> Vec<(String, f64, f64)> {
    let month_start = month.first_day();
    let mut out = Vec::new();
    for (id, records) in panel.stocks() {
        let p = records.partition_point(|r| r.date < month_start);
        let mut ret = 1.0;
        let mut any = false;
        let mut first_cap = 0.0;
        for rec in &records[p..] {
            if YearMonth::from_date(rec.date) != month {
                break;
            }
            if !any {
                first_cap = rec.cap;
            }
            any = true;
            ret *= 1.0 + rec.ret;
        }
        if !any {
            continue;
        }
        let cap = if p > 0 { records[p - 1].cap } else { first_cap };
        out.push((id.to_string(), ret - 1.0, cap));
    }
    out
}

/// Builds one month of the reference portfolio.
pub fn build_uirp_month(
    panel: &DailyStockPanel,
    r2: &RSquaredPanel,
    month: YearMonth,
) -> Result<UirpRow, UirpError> {
    let constituents = month_constituents(panel, month);
    if constituents.is_empty() {
        return Err(UirpError::EmptyMonth(month));
    }

    let mut covered_weighted = 0.0; // sum (1 - R²) K r over covered stocks
    let mut covered_weight = 0.0; // sum (1 - R²) K
    let mut covered_cap = 0.0; // sum K
    let mut covered_r2_cap = 0.0; // sum R² K
    let mut rest_weighted = 0.0;
    let mut rest_cap = 0.0;

    for (id, ret, cap) in &constituents {
        match r2.get(id, month) {
            Some(row) => {
                let precision = 1.0 - row.r2;
                covered_weighted += precision * cap * ret;
                covered_weight += precision * cap;
                covered_cap += cap;
                covered_r2_cap += row.r2 * cap;
            }
            None => {
                rest_weighted += cap * ret;
                rest_cap += cap;
            }
        }
    }

    let covered_ret = (covered_weight > 0.0).then(|| covered_weighted / covered_weight);
    let rest_ret = (rest_cap > 0.0).then(|| rest_weighted / rest_cap);
    let uirp_ret = match (covered_ret, rest_ret) {
        (Some(a), Some(b)) => (covered_cap * a + rest_cap * b) / (covered_cap + rest_cap),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        // Covered stocks all at R² = 1 and nothing else: degenerate zero
        // weight everywhere, fall back to the cap-weighted bucket return.
        (None, None) => {
            let total: f64 = constituents.iter().map(|(_, _, c)| c).sum();
            if total > 0.0 {
                constituents.iter().map(|(_, r, c)| c * r).sum::<f64>() / total
            } else {
                return Err(UirpError::EmptyMonth(month));
            }
        }
    };

    let total_cap = covered_cap + rest_cap;
    Ok(UirpRow {
        month,
        uirp_ret,
        covered_cap_share: if total_cap > 0.0 {
            covered_cap / total_cap
        } else {
            0.0
        },
        deviation: (covered_cap > 0.0).then(|| covered_r2_cap / covered_cap),
    })
}

/// Builds the portfolio for every panel month, skipping empty months.
pub fn build_uirp(panel: &DailyStockPanel, r2: &RSquaredPanel) -> UirpSeries {
    let rows = panel
        .months()
        .into_iter()
        .filter_map(|m| build_uirp_month(panel, r2, m).ok())
        .collect();
    UirpSeries::from_rows(rows)
}

/// Cap-weighted market return per month (the degenerate all-zero-R² case of
/// the reference portfolio), used by tests and the market-reference column.
pub fn market_monthly_returns(panel: &DailyStockPanel) -> BTreeMap<YearMonth, f64> {
    let mut out = BTreeMap::new();
    for month in panel.months() {
        let constituents = month_constituents(panel, month);
        let total: f64 = constituents.iter().map(|(_, _, c)| c).sum();
        if total > 0.0 {
            let ret = constituents.iter().map(|(_, r, c)| c * r).sum::<f64>() / total;
            out.insert(month, ret);
        }
    }
    out
}
