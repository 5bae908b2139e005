//! Validated data model and CSV codecs for stock, fund, and factor panels.
//!
//! Returns are simple (not log) returns throughout. Missing values travel as
//! empty CSV fields, never as sentinel numbers. Loaders reject files whose
//! header does not match the schema exactly and report the row number of the
//! first offending record; writers emit the canonical layout (records grouped
//! by id, dates ascending), so `write(load(x)) == x` for canonical files.

pub mod synth;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;

use crate::calendar::YearMonth;

#[derive(Debug, thiserror::Error)]
pub enum PanelError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema mismatch: expected header {expected:?}, got {got:?}")]
    Schema { expected: &'static str, got: String },
    #[error("row {row}: cannot parse {field} from {value:?}")]
    Parse {
        row: usize,
        field: &'static str,
        value: String,
    },
    #[error("row {row}: {message}")]
    Invariant { row: usize, message: String },
    #[error("{0}")]
    Malformed(String),
}

fn check_id(row: usize, field: &'static str, id: &str) -> Result<(), PanelError> {
    if id.is_empty() || id.contains(',') || id.contains('\n') {
        return Err(PanelError::Invariant {
            row,
            message: format!("{field} {id:?} must be non-empty and free of commas"),
        });
    }
    Ok(())
}

/// One daily stock observation.
#[derive(Debug, Clone, PartialEq)]
pub struct StockRecord {
    pub stock_id: String,
    pub date: NaiveDate,
    /// Simple daily return; must exceed -1.
    pub ret: f64,
    /// Market capitalization in currency units.
    pub cap: f64,
    /// Four-digit industry code (leading zeros significant).
    pub sic: u16,
}

/// Daily stock panel keyed by stock, dates strictly ascending within a stock.
#[derive(Debug, Clone, Default)]
pub struct DailyStockPanel {
    stocks: BTreeMap<String, Vec<StockRecord>>,
}

impl DailyStockPanel {
    /// Validates and groups records. Within each stock the records must
    /// already be in strictly ascending date order (which also rules out
    /// duplicate keys).
    pub fn from_records(records: Vec<StockRecord>) -> Result<Self, PanelError> {
        Self::from_records_at(records, 2)
    }

    fn from_records_at(records: Vec<StockRecord>, row_offset: usize) -> Result<Self, PanelError> {
        let mut stocks: BTreeMap<String, Vec<StockRecord>> = BTreeMap::new();
        for (i, rec) in records.into_iter().enumerate() {
            let row = i + row_offset;
            check_id(row, "stock_id", &rec.stock_id)?;
            if !(rec.ret > -1.0) || !rec.ret.is_finite() {
                return Err(PanelError::Invariant {
                    row,
                    message: format!("return {} must be finite and > -1", rec.ret),
                });
            }
            if !(rec.cap >= 0.0) || !rec.cap.is_finite() {
                return Err(PanelError::Invariant {
                    row,
                    message: format!("capitalization {} must be finite and >= 0", rec.cap),
                });
            }
            if rec.sic > 9999 {
                return Err(PanelError::Invariant {
                    row,
                    message: format!("sic {} is not a 4-digit code", rec.sic),
                });
            }
            let series = stocks.entry(rec.stock_id.clone()).or_default();
            if let Some(last) = series.last() {
                if rec.date <= last.date {
                    return Err(PanelError::Invariant {
                        row,
                        message: format!(
                            "dates for {} must be strictly increasing ({} after {})",
                            rec.stock_id, rec.date, last.date
                        ),
                    });
                }
            }
            series.push(rec);
        }
        Ok(Self { stocks })
    }

    pub fn n_stocks(&self) -> usize {
        self.stocks.len()
    }

    pub fn n_records(&self) -> usize {
        self.stocks.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.stocks.is_empty()
    }

    pub fn stock_ids(&self) -> impl Iterator<Item = &str> {
        self.stocks.keys().map(String::as_str)
    }

    pub fn stock(&self, id: &str) -> Option<&[StockRecord]> {
        self.stocks.get(id).map(Vec::as_slice)
    }

    pub fn stocks(&self) -> impl Iterator<Item = (&str, &[StockRecord])> {
        self.stocks.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.stocks
            .values()
            .filter_map(|s| s.first())
            .map(|r| r.date)
            .min()
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.stocks
            .values()
            .filter_map(|s| s.last())
            .map(|r| r.date)
            .max()
    }

    /// Distinct months carrying at least one record, ascending.
    pub fn months(&self) -> Vec<YearMonth> {
        let mut months: Vec<YearMonth> = self
            .stocks
            .values()
            .flatten()
            .map(|r| YearMonth::from_date(r.date))
            .collect();
        months.sort();
        months.dedup();
        months
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("stock_id,date,ret,cap,sic\n");
        for series in self.stocks.values() {
            for r in series {
                writeln!(
                    out,
                    "{},{},{},{},{:04}",
                    r.stock_id, r.date, r.ret, r.cap, r.sic
                )
                .unwrap();
            }
        }
        out
    }
}

/// One monthly fund observation; expense and turnover are annual rates and
/// may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct FundRecord {
    pub fund_id: String,
    pub month: YearMonth,
    /// Monthly net-of-expenses return.
    pub net_ret: f64,
    /// Total net assets at month end.
    pub tna: f64,
    pub expense: Option<f64>,
    pub turnover: Option<f64>,
    pub style: String,
    pub index_flag: Option<char>,
}

#[derive(Debug, Clone, Default)]
pub struct FundPanel {
    funds: BTreeMap<String, Vec<FundRecord>>,
}

impl FundPanel {
    /// Validates and groups records; months are sorted per fund and must be
    /// unique per fund.
    pub fn from_records(records: Vec<FundRecord>) -> Result<Self, PanelError> {
        Self::from_records_at(records, 2)
    }

    fn from_records_at(records: Vec<FundRecord>, row_offset: usize) -> Result<Self, PanelError> {
        let mut funds: BTreeMap<String, Vec<FundRecord>> = BTreeMap::new();
        for (i, rec) in records.into_iter().enumerate() {
            let row = i + row_offset;
            check_id(row, "fund_id", &rec.fund_id)?;
            if !rec.net_ret.is_finite() {
                return Err(PanelError::Invariant {
                    row,
                    message: "net_ret must be finite".into(),
                });
            }
            if !(rec.tna >= 0.0) || !rec.tna.is_finite() {
                return Err(PanelError::Invariant {
                    row,
                    message: format!("tna {} must be finite and >= 0", rec.tna),
                });
            }
            for (name, v) in [("expense", rec.expense), ("turnover", rec.turnover)] {
                if let Some(v) = v {
                    if !(v >= 0.0) || !v.is_finite() {
                        return Err(PanelError::Invariant {
                            row,
                            message: format!("{name} {v} must be finite and >= 0"),
                        });
                    }
                }
            }
            funds.entry(rec.fund_id.clone()).or_default().push(rec);
        }
        for (id, series) in &mut funds {
            series.sort_by_key(|r| r.month);
            for w in series.windows(2) {
                if w[0].month == w[1].month {
                    return Err(PanelError::Malformed(format!(
                        "fund {id} has duplicate records for {}",
                        w[0].month
                    )));
                }
            }
        }
        Ok(Self { funds })
    }

    pub fn n_funds(&self) -> usize {
        self.funds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funds.is_empty()
    }

    pub fn fund_ids(&self) -> impl Iterator<Item = &str> {
        self.funds.keys().map(String::as_str)
    }

    pub fn fund(&self, id: &str) -> Option<&[FundRecord]> {
        self.funds.get(id).map(Vec::as_slice)
    }

    pub fn funds(&self) -> impl Iterator<Item = (&str, &[FundRecord])> {
        self.funds.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Record of `id` at `month`, if any (months are sorted per fund).
    pub fn record(&self, id: &str, month: YearMonth) -> Option<&FundRecord> {
        let series = self.funds.get(id)?;
        series
            .binary_search_by_key(&month, |r| r.month)
            .ok()
            .map(|i| &series[i])
    }

    /// Distinct months carrying at least one record, ascending.
    pub fn months(&self) -> Vec<YearMonth> {
        let mut months: Vec<YearMonth> = self.funds.values().flatten().map(|r| r.month).collect();
        months.sort();
        months.dedup();
        months
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("fund_id,month,net_ret,tna,expense,turnover,style,index_flag\n");
        for series in self.funds.values() {
            for r in series {
                let expense = r.expense.map(|v| v.to_string()).unwrap_or_default();
                let turnover = r.turnover.map(|v| v.to_string()).unwrap_or_default();
                let flag = r.index_flag.map(String::from).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.fund_id, r.month, r.net_ret, r.tna, expense, turnover, r.style, flag
                )
                .unwrap();
            }
        }
        out
    }
}

/// Monthly factor returns: market excess, SMB, HML, UMD, and the risk-free
/// rate. Months are contiguous with exactly one record each.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorRow {
    pub month: YearMonth,
    pub mkt_excess: f64,
    pub smb: f64,
    pub hml: f64,
    pub umd: f64,
    pub rf: f64,
}

#[derive(Debug, Clone)]
pub struct FactorPanel {
    rows: Vec<FactorRow>,
}

impl FactorPanel {
    pub fn from_rows(rows: Vec<FactorRow>) -> Result<Self, PanelError> {
        if rows.is_empty() {
            return Err(PanelError::Malformed("factor panel is empty".into()));
        }
        for (i, w) in rows.windows(2).enumerate() {
            if w[1].month != w[0].month.plus_months(1) {
                return Err(PanelError::Invariant {
                    row: i + 3,
                    message: format!(
                        "factor months must be contiguous: {} follows {}",
                        w[1].month, w[0].month
                    ),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn first_month(&self) -> YearMonth {
        self.rows[0].month
    }

    pub fn last_month(&self) -> YearMonth {
        self.rows[self.rows.len() - 1].month
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, month: YearMonth) -> Option<&FactorRow> {
        let offset = month.months_since(self.first_month());
        if offset < 0 || offset as usize >= self.rows.len() {
            return None;
        }
        Some(&self.rows[offset as usize])
    }

    pub fn rows(&self) -> &[FactorRow] {
        &self.rows
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("month,mkt_excess,smb,hml,umd,rf\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.month, r.mkt_excess, r.smb, r.hml, r.umd, r.rf
            )
            .unwrap();
        }
        out
    }
}

// --- CSV loading -----------------------------------------------------------

struct RowReader<'r> {
    record: &'r csv::StringRecord,
    row: usize,
}

impl<'r> RowReader<'r> {
    fn field(&self, idx: usize, name: &'static str) -> Result<&'r str, PanelError> {
        self.record.get(idx).ok_or(PanelError::Parse {
            row: self.row,
            field: name,
            value: String::new(),
        })
    }

    fn parse<T: std::str::FromStr>(&self, idx: usize, name: &'static str) -> Result<T, PanelError> {
        let raw = self.field(idx, name)?;
        raw.parse().map_err(|_| PanelError::Parse {
            row: self.row,
            field: name,
            value: raw.to_string(),
        })
    }

    fn parse_opt<T: std::str::FromStr>(
        &self,
        idx: usize,
        name: &'static str,
    ) -> Result<Option<T>, PanelError> {
        let raw = self.field(idx, name)?;
        if raw.is_empty() {
            return Ok(None);
        }
        raw.parse().map(Some).map_err(|_| PanelError::Parse {
            row: self.row,
            field: name,
            value: raw.to_string(),
        })
    }
}

fn open_csv(
    path: &Path,
    expected_header: &'static str,
) -> Result<csv::Reader<std::fs::File>, PanelError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)?;
    let got = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != expected_header {
        return Err(PanelError::Schema {
            expected: expected_header,
            got,
        });
    }
    Ok(reader)
}

/// Loads `stocks.csv` (`stock_id,date,ret,cap,sic`).
pub fn load_stock_csv(path: impl AsRef<Path>) -> Result<DailyStockPanel, PanelError> {
    let mut reader = open_csv(path.as_ref(), "stock_id,date,ret,cap,sic")?;
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let r = RowReader {
            record: &rec,
            row: i + 2,
        };
        records.push(StockRecord {
            stock_id: r.field(0, "stock_id")?.to_string(),
            date: r.parse(1, "date")?,
            ret: r.parse(2, "ret")?,
            cap: r.parse(3, "cap")?,
            sic: r.parse(4, "sic")?,
        });
    }
    DailyStockPanel::from_records_at(records, 2)
}

/// Loads `funds.csv` (`fund_id,month,net_ret,tna,expense,turnover,style,index_flag`).
pub fn load_fund_csv(path: impl AsRef<Path>) -> Result<FundPanel, PanelError> {
    let mut reader = open_csv(
        path.as_ref(),
        "fund_id,month,net_ret,tna,expense,turnover,style,index_flag",
    )?;
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let r = RowReader {
            record: &rec,
            row: i + 2,
        };
        let flag_raw = r.field(7, "index_flag")?;
        let index_flag = match flag_raw.len() {
            0 => None,
            1 => flag_raw.chars().next(),
            _ => {
                return Err(PanelError::Parse {
                    row: i + 2,
                    field: "index_flag",
                    value: flag_raw.to_string(),
                })
            }
        };
        records.push(FundRecord {
            fund_id: r.field(0, "fund_id")?.to_string(),
            month: r.parse(1, "month")?,
            net_ret: r.parse(2, "net_ret")?,
            tna: r.parse(3, "tna")?,
            expense: r.parse_opt(4, "expense")?,
            turnover: r.parse_opt(5, "turnover")?,
            style: r.field(6, "style")?.to_string(),
            index_flag,
        });
    }
    FundPanel::from_records_at(records, 2)
}

/// Loads `factors.csv` (`month,mkt_excess,smb,hml,umd,rf`).
pub fn load_factor_csv(path: impl AsRef<Path>) -> Result<FactorPanel, PanelError> {
    let mut reader = open_csv(path.as_ref(), "month,mkt_excess,smb,hml,umd,rf")?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let r = RowReader {
            record: &rec,
            row: i + 2,
        };
        rows.push(FactorRow {
            month: r.parse(0, "month")?,
            mkt_excess: r.parse(1, "mkt_excess")?,
            smb: r.parse(2, "smb")?,
            hml: r.parse(3, "hml")?,
            umd: r.parse(4, "umd")?,
            rf: r.parse(5, "rf")?,
        });
    }
    FactorPanel::from_rows(rows)
}
