//! Per-stock informativeness estimation from daily prices.
//!
//! Each stock's daily return is regressed on its own lagged normalized price
//! and the lagged normalized prices of up to four industry portfolios (the
//! 4-, 3-, 2-, and 1-digit SIC rings, each excluding the finer ring so every
//! stock appears in at most one regressor per level). The regression R² is
//! the stock's informativeness estimate for the month: prices that predict
//! returns carry more private information. Estimation for month `m` uses
//! daily data from months `m-12` through `m-1` only, drops exact-zero
//! returns (stale quotes), and requires 60 surviving observations.
//!
//! Prices are synthetic: each stock's price compounds its returns from 1 at
//! its first record and is divided by the market index price, a cap-weighted
//! compound of all panel stocks anchored at the panel's first date. Industry
//! portfolios use previous-day capitalization weights.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};

use crate::calendar::YearMonth;
use crate::panel::{DailyStockPanel, PanelError};
use crate::regression::{ols_fit, RegressionError};

/// Observations required for a reported R².
pub const MIN_OBSERVATIONS: usize = 60;

/// Months in the rolling estimation window (`m-12` through `m-1`).
pub const WINDOW_MONTHS: i64 = 12;

#[derive(Debug, thiserror::Error)]
pub enum ProxyError {
    #[error("stock panel is empty")]
    EmptyPanel,
    #[error("unknown stock {0:?}")]
    UnknownStock(String),
}

/// A date-indexed price path; dates strictly ascending.
#[derive(Debug, Clone, Default)]
pub struct PriceSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Value at the given date, if a point exists there.
    pub fn at(&self, date: NaiveDate) -> Option<f64> {
        self.dates
            .binary_search(&date)
            .ok()
            .map(|i| self.values[i])
    }

    /// Value at the last point on or before `date`.
    pub fn at_or_before(&self, date: NaiveDate) -> Option<f64> {
        match self.dates.binary_search(&date) {
            Ok(i) => Some(self.values[i]),
            Err(0) => None,
            Err(i) => Some(self.values[i - 1]),
        }
    }
}

/// Normalized price paths for every stock plus the market index path.
#[derive(Debug, Clone)]
pub struct NormalizedPrices {
    /// Market index price (raw, compounded from 1 at the panel's first date).
    pub market: PriceSeries,
    /// Per-stock price divided by the market index.
    pub stocks: BTreeMap<String, PriceSeries>,
}

/// Industry ring price series for one stock, normalized by the market index.
/// Index 0 is the 4-digit ring, index 3 the 1-digit ring; `None` marks an
/// empty ring (no other member ever trades).
#[derive(Debug, Clone)]
pub struct IndustryPrices {
    pub levels: [Option<PriceSeries>; 4],
}

/// One estimated stock-month.
#[derive(Debug, Clone)]
pub struct RSquaredRow {
    pub stock_id: String,
    pub month: YearMonth,
    pub r2: f64,
    pub n_obs: usize,
    /// Regressor count actually used (own price plus available rings).
    pub n_regressors: usize,
    /// Which SIC rings entered the regression (4-digit first).
    pub levels_used: [bool; 4],
}

/// Why a stock produced no row for a month.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    TooFewObservations { n_obs: usize },
    RankDeficient,
}

#[derive(Debug, Clone)]
pub struct SkippedStock {
    pub stock_id: String,
    pub month: YearMonth,
    pub reason: SkipReason,
}

/// Rows for one estimation month plus the skip log.
#[derive(Debug, Clone)]
pub struct MonthEstimate {
    pub rows: Vec<RSquaredRow>,
    pub skipped: Vec<SkippedStock>,
}

/// The collected informativeness panel.
#[derive(Debug, Clone, Default)]
pub struct RSquaredPanel {
    rows: Vec<RSquaredRow>,
    index: HashMap<(String, YearMonth), usize>,
}

impl RSquaredPanel {
    pub fn from_rows(rows: Vec<RSquaredRow>) -> Result<Self, PanelError> {
        let mut index = HashMap::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if !(0.0..=1.0).contains(&row.r2) {
                return Err(PanelError::Malformed(format!(
                    "r2 {} out of [0,1] for {} {}",
                    row.r2, row.stock_id, row.month
                )));
            }
            if row.n_obs < MIN_OBSERVATIONS {
                return Err(PanelError::Malformed(format!(
                    "r2 reported on {} observations (< {MIN_OBSERVATIONS}) for {} {}",
                    row.n_obs, row.stock_id, row.month
                )));
            }
            if index
                .insert((row.stock_id.clone(), row.month), i)
                .is_some()
            {
                return Err(PanelError::Malformed(format!(
                    "duplicate r2 row for {} {}",
                    row.stock_id, row.month
                )));
            }
        }
        Ok(Self { rows, index })
    }

    pub fn rows(&self) -> &[RSquaredRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, stock_id: &str, month: YearMonth) -> Option<&RSquaredRow> {
        // Keyed lookup without building a String would need a borrowed pair;
        // panels are small enough that the allocation is irrelevant.
        self.index
            .get(&(stock_id.to_string(), month))
            .map(|&i| &self.rows[i])
    }

    pub fn to_csv_string(&self) -> String {
        let mut sorted: Vec<&RSquaredRow> = self.rows.iter().collect();
        sorted.sort_by(|a, b| (&a.stock_id, a.month).cmp(&(&b.stock_id, b.month)));
        let mut out = String::from("stock_id,month,r2,n_obs\n");
        for row in sorted {
            writeln!(out, "{},{},{},{}", row.stock_id, row.month, row.r2, row.n_obs).unwrap();
        }
        out
    }
}

/// Loads `proxy_er.csv` (`stock_id,month,r2,n_obs`). Ring metadata is not
/// part of the file format; loaded rows carry only what downstream
/// consumers (the reference-portfolio builder) need.
pub fn load_r2_csv(path: impl AsRef<Path>) -> Result<RSquaredPanel, PanelError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let got = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != "stock_id,month,r2,n_obs" {
        return Err(PanelError::Schema {
            expected: "stock_id,month,r2,n_obs",
            got,
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let parse_err = |field: &'static str, value: &str| PanelError::Parse {
            row,
            field,
            value: value.to_string(),
        };
        let stock_id = rec.get(0).unwrap_or_default().to_string();
        let month_raw = rec.get(1).unwrap_or_default();
        let r2_raw = rec.get(2).unwrap_or_default();
        let n_raw = rec.get(3).unwrap_or_default();
        rows.push(RSquaredRow {
            stock_id,
            month: month_raw.parse().map_err(|_| parse_err("month", month_raw))?,
            r2: r2_raw.parse().map_err(|_| parse_err("r2", r2_raw))?,
            n_obs: n_raw.parse().map_err(|_| parse_err("n_obs", n_raw))?,
            n_regressors: 0,
            levels_used: [false; 4],
        });
    }
    RSquaredPanel::from_rows(rows)
}

// --- price construction ------------------------------------------------------

/// Daily weighted-return accumulator: `(sum w*r, sum w)` per date, with
/// weights taken from each stock's previous record capitalization.
type DailySums = BTreeMap<NaiveDate, (f64, f64)>;

fn add_contribution(sums: &mut DailySums, date: NaiveDate, w: f64, r: f64) {
    let slot = sums.entry(date).or_insert((0.0, 0.0));
    slot.0 += w * r;
    slot.1 += w;
}

/// Compounds a weighted-return map into a price path anchored at
/// `first_member`: price 1 there, multiplied by `1 + sum(w*r)/sum(w)` at each
/// later date with positive weight.
fn compound(sums: &DailySums, first_member: NaiveDate) -> PriceSeries {
    let mut series = PriceSeries {
        dates: vec![first_member],
        values: vec![1.0],
    };
    let mut price = 1.0;
    for (&date, &(num, den)) in sums.range((
        std::ops::Bound::Excluded(first_member),
        std::ops::Bound::Unbounded,
    )) {
        if den > 0.0 {
            price *= 1.0 + num / den;
            series.dates.push(date);
            series.values.push(price);
        }
    }
    series
}

fn sic_prefix(sic: u16, level: usize) -> u16 {
    // level 4 keeps all digits, level 1 only the first.
    sic / 10u16.pow(4 - level as u32)
}

/// Cached price machinery for a panel: market index, per-stock normalized
/// prices, and per-SIC group sums from which ring portfolios are assembled.
pub struct ProxyEstimator<'p> {
    panel: &'p DailyStockPanel,
    market: PriceSeries,
    normalized: BTreeMap<String, PriceSeries>,
    /// Per full SIC code: weighted-return sums and earliest member date.
    sums4: HashMap<u16, DailySums>,
    first4: HashMap<u16, NaiveDate>,
    /// Distinct child prefixes per parent prefix, per level boundary.
    children: [HashMap<u16, BTreeSet<u16>>; 3],
    /// Normalized ring series for levels 3..1, shared by all stocks with the
    /// same SIC code.
    coarse_rings: HashMap<u16, [Option<PriceSeries>; 3]>,
    /// Per-stock 4-digit ring (the only level whose exclusion is per stock).
    own_rings: HashMap<String, Option<PriceSeries>>,
    /// SIC code used for each stock (from its first record).
    stock_sic: HashMap<String, u16>,
}

impl<'p> ProxyEstimator<'p> {
    pub fn new(panel: &'p DailyStockPanel) -> Result<Self, ProxyError> {
        let first_date = panel.first_date().ok_or(ProxyError::EmptyPanel)?;

        let mut market_sums: DailySums = BTreeMap::new();
        let mut sums4: HashMap<u16, DailySums> = HashMap::new();
        let mut first4: HashMap<u16, NaiveDate> = HashMap::new();
        let mut children: [HashMap<u16, BTreeSet<u16>>; 3] = Default::default();
        let mut stock_sic: HashMap<String, u16> = HashMap::new();

        for (id, records) in panel.stocks() {
            let sic = records[0].sic;
            stock_sic.insert(id.to_string(), sic);
            let entry = first4.entry(sic).or_insert(records[0].date);
            *entry = (*entry).min(records[0].date);
            for level in 1..=3 {
                children[level - 1]
                    .entry(sic_prefix(sic, level))
                    .or_default()
                    .insert(sic_prefix(sic, level + 1));
            }
            let group = sums4.entry(sic).or_default();
            for k in 1..records.len() {
                let w = records[k - 1].cap;
                let r = records[k].ret;
                add_contribution(group, records[k].date, w, r);
                add_contribution(&mut market_sums, records[k].date, w, r);
            }
        }

        let market = compound(&market_sums, first_date);

        let mut normalized = BTreeMap::new();
        for (id, records) in panel.stocks() {
            let mut series = PriceSeries {
                dates: Vec::with_capacity(records.len()),
                values: Vec::with_capacity(records.len()),
            };
            let mut raw = 1.0;
            for (k, rec) in records.iter().enumerate() {
                if k > 0 {
                    raw *= 1.0 + rec.ret;
                }
                let m = market
                    .at_or_before(rec.date)
                    .expect("market anchored at panel start");
                series.dates.push(rec.date);
                series.values.push(raw / m);
            }
            normalized.insert(id.to_string(), series);
        }

        let mut estimator = Self {
            panel,
            market,
            normalized,
            sums4,
            first4,
            children,
            coarse_rings: HashMap::new(),
            own_rings: HashMap::new(),
            stock_sic,
        };
        estimator.build_coarse_rings();
        let ids: Vec<String> = panel.stock_ids().map(str::to_string).collect();
        for id in ids {
            let ring = estimator.own_code_ring(&id);
            estimator.own_rings.insert(id, ring);
        }
        Ok(estimator)
    }

    /// Merges the level-4 sums of `included` codes into one ring and
    /// compounds it; `None` when no member code exists.
    fn merged_ring(&self, included: &[u16]) -> Option<PriceSeries> {
        if included.is_empty() {
            return None;
        }
        let mut sums: DailySums = BTreeMap::new();
        let mut first: Option<NaiveDate> = None;
        for &code in included {
            if let Some(group) = self.sums4.get(&code) {
                for (&d, &(num, den)) in group {
                    let slot = sums.entry(d).or_insert((0.0, 0.0));
                    slot.0 += num;
                    slot.1 += den;
                }
            }
            if let Some(&d) = self.first4.get(&code) {
                first = Some(first.map_or(d, |f: NaiveDate| f.min(d)));
            }
        }
        let raw = compound(&sums, first?);
        Some(self.normalize(raw))
    }

    fn normalize(&self, raw: PriceSeries) -> PriceSeries {
        let values = raw
            .dates
            .iter()
            .zip(&raw.values)
            .map(|(&d, &v)| v / self.market.at_or_before(d).expect("market covers panel"))
            .collect();
        PriceSeries {
            dates: raw.dates,
            values,
        }
    }

    /// Rings at levels 3, 2, 1 are shared by every stock with the same SIC
    /// code (exclusion works on whole prefix groups), so build them once per
    /// distinct code.
    fn build_coarse_rings(&mut self) {
        let codes: Vec<u16> = self.sums4.keys().copied().collect();
        for sic in codes {
            let mut rings: [Option<PriceSeries>; 3] = [None, None, None];
            for (slot, level) in (1..=3).rev().enumerate() {
                // ring at `level` = children of the level-prefix minus the
                // (level+1)-prefix subtree containing this stock
                let parent = sic_prefix(sic, level);
                let own_child = sic_prefix(sic, level + 1);
                let included: Vec<u16> = self.children[level - 1]
                    .get(&parent)
                    .map(|kids| {
                        kids.iter()
                            .filter(|&&c| c != own_child)
                            .flat_map(|&c| self.codes_under(c, level + 1))
                            .collect()
                    })
                    .unwrap_or_default();
                rings[slot] = self.merged_ring(&included);
            }
            self.coarse_rings.insert(sic, rings);
        }
    }

    /// All full SIC codes under `prefix` at `level` (level 4 = the code
    /// itself).
    fn codes_under(&self, prefix: u16, level: usize) -> Vec<u16> {
        if level == 4 {
            return vec![prefix];
        }
        self.children[level - 1]
            .get(&prefix)
            .map(|kids| {
                kids.iter()
                    .flat_map(|&c| self.codes_under(c, level + 1))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// The same-code ring excluding the stock itself. The exclusion is exact:
    /// when the stock is the only member the subtracted sums cancel to zero.
    fn own_code_ring(&self, stock_id: &str) -> Option<PriceSeries> {
        let sic = *self.stock_sic.get(stock_id)?;
        let records = self.panel.stock(stock_id)?;
        let mut sums = self.sums4.get(&sic)?.clone();
        for k in 1..records.len() {
            let slot = sums
                .get_mut(&records[k].date)
                .expect("own contribution exists");
            slot.0 -= records[k - 1].cap * records[k].ret;
            slot.1 -= records[k - 1].cap;
        }
        let first = self
            .panel
            .stocks()
            .filter(|(id, recs)| *id != stock_id && recs[0].sic == sic)
            .map(|(_, recs)| recs[0].date)
            .min()?;
        // Exact cancellation leaves zero weight; tiny residuals from float
        // cancellation are also treated as empty days.
        let scale: f64 = records.iter().map(|r| r.cap.abs()).fold(0.0, f64::max);
        let threshold = scale * 1e-9;
        let cleaned: DailySums = sums
            .into_iter()
            .map(|(d, (num, den))| {
                if den.abs() <= threshold {
                    (d, (0.0, 0.0))
                } else {
                    (d, (num, den))
                }
            })
            .collect();
        let raw = compound(&cleaned, first);
        Some(self.normalize(raw))
    }

    /// Industry ring price series for one stock (4-digit first).
    pub fn industry_prices(&self, stock_id: &str) -> Result<IndustryPrices, ProxyError> {
        let sic = *self
            .stock_sic
            .get(stock_id)
            .ok_or_else(|| ProxyError::UnknownStock(stock_id.to_string()))?;
        let coarse = self.coarse_rings.get(&sic).expect("built for every code");
        Ok(IndustryPrices {
            levels: [
                self.own_rings.get(stock_id).cloned().flatten(),
                coarse[0].clone(),
                coarse[1].clone(),
                coarse[2].clone(),
            ],
        })
    }

    pub fn market(&self) -> &PriceSeries {
        &self.market
    }

    pub fn normalized_stock(&self, stock_id: &str) -> Option<&PriceSeries> {
        self.normalized.get(stock_id)
    }

    /// Estimates every stock's R² for month `m` from the `m-12..=m-1` window.
    pub fn estimate_month(&self, month: YearMonth) -> MonthEstimate {
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        for (id, records) in self.panel.stocks() {
            match self.estimate_stock_month(id, records, month) {
                Ok(row) => rows.push(row),
                Err(reason) => skipped.push(SkippedStock {
                    stock_id: id.to_string(),
                    month,
                    reason,
                }),
            }
        }
        MonthEstimate { rows, skipped }
    }

    fn estimate_stock_month(
        &self,
        stock_id: &str,
        records: &[crate::panel::StockRecord],
        month: YearMonth,
    ) -> Result<RSquaredRow, SkipReason> {
        let normalized = &self.normalized[stock_id];
        let sic = self.stock_sic[stock_id];
        let coarse = &self.coarse_rings[&sic];
        let rings: [Option<&PriceSeries>; 4] = [
            self.own_rings[stock_id].as_ref(),
            coarse[0].as_ref(),
            coarse[1].as_ref(),
            coarse[2].as_ref(),
        ];

        // Candidate observations: window days with a prior trading day and a
        // nonzero return.
        let mut y = Vec::new();
        let mut own = Vec::new();
        let mut ring_vals: [Vec<f64>; 4] = Default::default();
        let mut ring_ok = [true; 4];
        for k in 1..records.len() {
            let offset = YearMonth::from_date(records[k].date).months_since(month);
            if !(-WINDOW_MONTHS..=-1).contains(&offset) {
                continue;
            }
            if records[k].ret == 0.0 {
                continue;
            }
            let lag = records[k - 1].date;
            y.push(records[k].ret);
            own.push(normalized.values[k - 1]);
            for (l, ring) in rings.iter().enumerate() {
                if !ring_ok[l] {
                    continue;
                }
                match ring.and_then(|r| r.at_or_before(lag)) {
                    Some(v) => ring_vals[l].push(v),
                    None => ring_ok[l] = false,
                }
            }
        }
        let n = y.len();
        if n < MIN_OBSERVATIONS {
            return Err(SkipReason::TooFewObservations { n_obs: n });
        }

        let levels_used = [
            ring_ok[0] && ring_vals[0].len() == n,
            ring_ok[1] && ring_vals[1].len() == n,
            ring_ok[2] && ring_vals[2].len() == n,
            ring_ok[3] && ring_vals[3].len() == n,
        ];
        let mut columns: Vec<&[f64]> = vec![&own];
        for (l, used) in levels_used.iter().enumerate() {
            if *used {
                columns.push(&ring_vals[l]);
            }
        }
        let k = columns.len();
        let mut design = DMatrix::<f64>::zeros(n, k);
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                design[(i, j)] = v;
            }
        }
        let fit = ols_fit(&design, &DVector::from_vec(y)).map_err(|e| match e {
            RegressionError::RankDeficient => SkipReason::RankDeficient,
            RegressionError::InsufficientData { .. } => SkipReason::TooFewObservations { n_obs: n },
        })?;

        Ok(RSquaredRow {
            stock_id: stock_id.to_string(),
            month,
            r2: fit.r_squared,
            n_obs: n,
            n_regressors: k,
            levels_used,
        })
    }

    /// Months `m` for which the full window `m-12..=m-1` lies inside the
    /// panel's date coverage.
    pub fn feasible_months(&self) -> Vec<YearMonth> {
        let Some(first) = self.panel.first_date() else {
            return Vec::new();
        };
        let Some(last) = self.panel.last_date() else {
            return Vec::new();
        };
        let start = YearMonth::from_date(first).plus_months(WINDOW_MONTHS);
        let end = YearMonth::from_date(last);
        if start > end {
            return Vec::new();
        }
        start.range_inclusive(end).collect()
    }
}


/// Builds the market index and per-stock normalized price paths.
pub fn build_normalized_prices(panel: &DailyStockPanel) -> Result<NormalizedPrices, ProxyError> {
    let est = ProxyEstimator::new(panel)?;
    Ok(NormalizedPrices {
        market: est.market.clone(),
        stocks: est.normalized.clone(),
    })
}

/// Industry ring prices for one stock.
pub fn build_industry_prices(
    panel: &DailyStockPanel,
    stock_id: &str,
) -> Result<IndustryPrices, ProxyError> {
    ProxyEstimator::new(panel)?.industry_prices(stock_id)
}

/// Estimates every stock's R² for one month.
pub fn estimate_proxy_er(
    panel: &DailyStockPanel,
    month: YearMonth,
) -> Result<MonthEstimate, ProxyError> {
    Ok(ProxyEstimator::new(panel)?.estimate_month(month))
}
